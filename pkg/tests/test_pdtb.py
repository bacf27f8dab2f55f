import json

import pytest

from discoprobe import fixtures
from discoprobe.errors import MalformedRecord, UnknownSectionNumber
from discoprobe.tasks import adapt_pdtb, parse_pdtb_records, remove_connective


@pytest.fixture(scope="module")
def records():
    return parse_pdtb_records(fixtures.fixture_pdtb_jsonl().splitlines())


@pytest.fixture(scope="module")
def adapted(records):
    return adapt_pdtb(records)


def test_section_routing(records, adapted):
    for split, sections in (
        ("train", range(2, 15)),
        ("dev", range(15, 19)),
        ("test", range(19, 24)),
    ):
        for rel in (adapted.explicit, adapted.implicit):
            for inst in getattr(rel, split):
                # doc ids embed the section for fixture records
                assert inst.source_doc_id.startswith("wsj")


def test_routing_by_explicit_sections():
    def rec(section):
        return json.dumps(
            {
                "section": section,
                "type": "implicit",
                "arg1": "First argument sentence here.",
                "arg2": "Second argument sentence here.",
                "connective": "so",
                "label": "Contingency.Cause",
            }
        )

    # 10 train instances keep the label through filtering
    lines = [rec(3) for _ in range(10)] + [rec(16), rec(21)]
    result = adapt_pdtb(parse_pdtb_records(lines))
    assert result.implicit.sizes() == (10, 1, 1)


def test_out_of_range_sections_dropped(records, adapted):
    out = [r for r in records if r.section in (0, 1, 24)]
    assert out  # the fixture includes them
    total = sum(adapted.explicit.sizes()) + sum(adapted.implicit.sizes())
    assert total <= len(records) - len(out)


def test_invalid_section_number():
    line = json.dumps(
        {"section": 25, "type": "explicit", "arg1": "a b.", "arg2": "c d.", "connective": "", "label": "X.Y"}
    )
    with pytest.raises(UnknownSectionNumber):
        parse_pdtb_records([line])


def test_rare_label_removed_everywhere(adapted):
    # Expansion.Conjunction has 9 train instances in the fixture: filtered
    assert "Expansion.Conjunction" not in adapted.explicit_labels.names
    assert adapted.explicit_labels.names == ("Comparison.Contrast", "Contingency.Cause")
    # and its dev/test records are discarded, not errors
    for split in ("train", "dev", "test"):
        for inst in getattr(adapted.explicit, split):
            assert inst.label < adapted.explicit_labels.k


def test_min_label_count_invariant(adapted):
    for rel, space in ((adapted.explicit, adapted.explicit_labels), (adapted.implicit, adapted.implicit_labels)):
        counts = {}
        for inst in rel.train:
            counts[inst.label] = counts.get(inst.label, 0) + 1
        assert min(counts.values()) >= 10
        assert space.k >= 2


def test_connective_removed_from_arg2(adapted):
    example = fixtures.PDTB_EXAMPLE
    inst = next(
        i
        for i in adapted.explicit.train
        if i.s1.raw == example["arg1"]
    )
    assert inst.s2.raw == fixtures.PDTB_EXAMPLE_ARG2_STRIPPED
    assert adapted.explicit_labels.names[inst.label] == "Comparison.Contrast"


def test_implicit_connective_not_removed(adapted):
    # implicit connectives are annotator-inserted, not part of the text
    for inst in adapted.implicit.train:
        assert inst.s2.raw  # unchanged text, never stripped
    impl = [r for r in parse_pdtb_records(fixtures.fixture_pdtb_jsonl().splitlines()) if r.rel_type == "implicit"]
    assert all(r.arg2 == next(
        i.s2.raw for i in adapted.implicit.train + adapted.implicit.dev + adapted.implicit.test
        if i.s1.raw == r.arg1
    ) for r in impl if r.section in range(2, 24))


def test_remove_connective_prefix():
    assert (
        remove_connective("But it remains to be seen.", "But")
        == "it remains to be seen."
    )


def test_remove_connective_interior():
    assert remove_connective("It failed because the pump broke.", "because") == "It failed the pump broke."


def test_remove_connective_word_boundary():
    # "and" should not eat the inside of "android"
    assert remove_connective("The android walked and waved.", "and") == "The android walked waved."


def test_remove_connective_absent():
    assert remove_connective("No marker here.", "but") == "No marker here."


def test_parse_rejects_bad_type():
    line = json.dumps(
        {"section": 3, "type": "weird", "arg1": "a b.", "arg2": "c d.", "connective": "", "label": "X.Y"}
    )
    with pytest.raises(MalformedRecord):
        parse_pdtb_records([line])
