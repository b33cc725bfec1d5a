"""Taxonomy data: the fixed permission and purpose tables."""

import pytest

from purposeguard.errors import UnknownPermissionError, UnknownPurposeError
from purposeguard.taxonomy import DEFAULT_TAXONOMY, PermissionGroup, load_taxonomy

# Expected group membership, written out by hand (short names).
EXPECTED_GROUPS = {
    "CALENDAR": {"READ_CALENDAR", "WRITE_CALENDAR"},
    "CAMERA": {"CAMERA"},
    "CONTACTS": {"READ_CONTACTS", "WRITE_CONTACTS", "GET_ACCOUNTS"},
    "LOCATION": {"ACCESS_FINE_LOCATION", "ACCESS_COARSE_LOCATION"},
    "MICROPHONE": {"RECORD_AUDIO"},
    "PHONE": {
        "READ_PHONE_STATE",
        "READ_PHONE_NUMBERS",
        "CALL_PHONE",
        "ANSWER_PHONE_CALLS",
        "READ_CALL_LOG",
        "WRITE_CALL_LOG",
        "ADD_VOICEMAIL",
        "USE_SIP",
        "PROCESS_OUTGOING_CALLS",
    },
    "SENSORS": {"BODY_SENSORS"},
    "SMS": {"SEND_SMS", "RECEIVE_SMS", "READ_SMS", "RECEIVE_WAP_PUSH", "RECEIVE_MMS"},
    "STORAGE": {"READ_EXTERNAL_STORAGE", "WRITE_EXTERNAL_STORAGE"},
}

EXPECTED_PURPOSES = {
    "Displaying Advertisements",
    "Gathering Analytics",
    "Monitoring Health",
    "Connecting with Other People or Social Media",
    "Conducting Research",
    "Backing-up to Cloud Service",
    "Navigating to a Destination",
    "Searching Nearby Places",
    "Delivering Local Weather",
    "Adding Location to Photo",
    "Playing Games",
    "Securing Device",
    "Messaging or Calling People",
    "Recognizing Voice or Speech",
    "Streaming Media",
    "Notifying Emergency Services",
    "Supporting Development",
    "Running Other Features",
}

tax = DEFAULT_TAXONOMY


def test_counts():
    assert len(tax.permissions) == 26
    assert len(tax.purposes) == 18
    assert len(tax.permission_groups()) == 9


def test_group_membership_exact():
    groups = tax.permission_groups()
    assert {g.value for g in groups} == set(EXPECTED_GROUPS)
    for group, members in groups.items():
        assert {p.short_name for p in members} == EXPECTED_GROUPS[group.value]


def test_purpose_names_exact():
    assert {p.name for p in tax.purposes} == EXPECTED_PURPOSES


def test_every_display_name_is_for_plus_name():
    for p in tax.purposes:
        assert p.display_name == "For " + p.name


def test_permission_prefix_and_short_names():
    for p in tax.permissions:
        assert p.name == "android.permission." + p.short_name
        assert tax.permission(p.short_name) is p
        assert tax.permission(p.name) is p


def test_catch_all_purposes_cover_all_26():
    for name in ("Conducting Research", "Running Other Features"):
        assert len(tax.purpose(name).likely_permissions) == 26


def test_other_purposes_cover_a_subset():
    weather = tax.purpose("Delivering Local Weather")
    names = {p.short_name for p in weather.likely_permissions}
    assert "ACCESS_FINE_LOCATION" in names
    assert len(names) < 26


@pytest.mark.parametrize(
    "raw,canonical",
    [
        ("Advertisement", "Displaying Advertisements"),
        ("advertisement", "Displaying Advertisements"),
        ("For Advertisement", "Displaying Advertisements"),
        ("Backup to Cloud Service", "Backing-up to Cloud Service"),
        ("Other Features", "Running Other Features"),
        ("For Other Features", "Running Other Features"),
        ("Geotagging", "Adding Location to Photo"),
        ("For Displaying Advertisements", "Displaying Advertisements"),
        ("RUNNING OTHER FEATURES", "Running Other Features"),
    ],
)
def test_purpose_normalization(raw, canonical):
    assert tax.normalize_purpose(raw).name == canonical


def test_unknown_names_raise():
    with pytest.raises(UnknownPermissionError):
        tax.permission("android.permission.NOT_A_THING")
    with pytest.raises(UnknownPurposeError):
        tax.normalize_purpose("Mining Cryptocurrency")


def test_is_dangerous():
    assert tax.is_dangerous("android.permission.CAMERA")
    assert tax.is_dangerous("CAMERA")
    assert not tax.is_dangerous("android.permission.INTERNET")


def test_load_taxonomy_fresh_copy_matches_default():
    fresh = load_taxonomy()
    assert {p.name for p in fresh.permissions} == {p.name for p in tax.permissions}
    assert {p.name for p in fresh.purposes} == {p.name for p in tax.purposes}


def test_groups_partition_the_permissions():
    seen = []
    for members in tax.permission_groups().values():
        seen.extend(p.name for p in members)
    assert len(seen) == 26
    assert len(set(seen)) == 26


def test_permission_group_enum_matches_data():
    assert {g.value for g in PermissionGroup} == set(EXPECTED_GROUPS)
