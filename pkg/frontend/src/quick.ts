import type { QuickSettings, SensorState } from "./types.js";

const SENSOR_LABELS: Record<string, string> = {
  camera: "Camera",
  location: "Location",
  microphone: "Microphone",
};

/** Render the sensor toggles. Org-locked sensors render disabled. */
export function renderQuickSettings(
  container: HTMLElement,
  settings: QuickSettings,
  onToggle: (sensor: string, state: SensorState) => void,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  for (const [sensor, row] of Object.entries(settings)) {
    const label = doc.createElement("label");
    label.className = row.locked ? "quick-toggle locked" : "quick-toggle";
    label.dataset.sensor = sensor;

    const input = doc.createElement("input");
    input.type = "checkbox";
    input.checked = row.state === "On";
    input.disabled = row.locked;
    input.addEventListener("change", () =>
      onToggle(sensor, input.checked ? "On" : "Off"),
    );
    label.appendChild(input);

    const text = doc.createElement("span");
    text.textContent = SENSOR_LABELS[sensor] ?? sensor;
    label.appendChild(text);

    container.appendChild(label);
  }
}
