import pytest

from discoprobe import fixtures
from discoprobe.corpus import Sentence
from discoprobe.errors import MalformedRow
from discoprobe.tasks import (
    SPInstance,
    adapt_rst,
    bso_label_space,
    deserialize_dataset,
    parse_rst_records,
    serialize_dataset,
    sp_label_space,
    synth_bso,
    synth_sp,
)
from discoprobe.tasks.instances import DatasetSplit


def test_sp_row_format(tmp_path):
    sentences = tuple(Sentence.from_raw(t) for t in "D A B C E".split())
    inst = SPInstance(sentences=sentences, label=3, source_doc_id="d", instance_id="d#000000")
    split = DatasetSplit("sp", [inst], [], [])
    serialize_dataset(split, sp_label_space(), tmp_path)
    row = (tmp_path / "sp.train.tsv").read_text().rstrip("\n")
    assert row == "3\tD\tA\tB\tC\tE"


def test_roundtrip_content_equality(small_docs, tmp_path):
    split = synth_sp(small_docs, 13, (20, 8, 8), any_window=True)
    serialize_dataset(split, sp_label_space(), tmp_path)
    back, labels = deserialize_dataset(tmp_path, "sp")
    assert labels.names == sp_label_space().names
    for name, instances in split.items():
        loaded = getattr(back, name)
        assert len(loaded) == len(instances)
        for a, b in zip(instances, loaded):
            assert a.label == b.label and a.texts() == b.texts()


def test_roundtrip_bytes_stable(small_docs, tmp_path):
    split = synth_bso(small_docs, 13, (20, 8, 8))
    serialize_dataset(split, bso_label_space(), tmp_path / "one")
    back, labels = deserialize_dataset(tmp_path / "one", "bso")
    serialize_dataset(back, labels, tmp_path / "two")
    for name in ("train", "dev", "test"):
        a = (tmp_path / "one" / f"bso.{name}.tsv").read_bytes()
        b = (tmp_path / "two" / f"bso.{name}.tsv").read_bytes()
        assert a == b


def test_wrong_arity_row(tmp_path):
    (tmp_path / "sp.train.tsv").write_text("3\tonly\tfour\tcells\there\n")
    (tmp_path / "sp.dev.tsv").write_text("")
    (tmp_path / "sp.test.tsv").write_text("")
    (tmp_path / "sp.labels.txt").write_text("0\n1\n2\n3\n4\n")
    with pytest.raises(MalformedRow):
        deserialize_dataset(tmp_path, "sp")


def test_bad_label_row(tmp_path):
    (tmp_path / "ssp.train.tsv").write_text("x\ta sentence\n")
    (tmp_path / "ssp.dev.tsv").write_text("")
    (tmp_path / "ssp.test.tsv").write_text("")
    (tmp_path / "ssp.labels.txt").write_text("body\nabstract\n")
    with pytest.raises(MalformedRow):
        deserialize_dataset(tmp_path, "ssp")


def test_rst_row_join(tmp_path):
    docs = parse_rst_records(fixtures.fixture_rst_jsonl().splitlines())
    split, space = adapt_rst(docs, dev_doc_ids=["contrast-dev"])
    serialize_dataset(split, space, tmp_path)
    rows = (tmp_path / "rst.train.tsv").read_text().splitlines()
    assert any(" ||| " in row for row in rows)
    back, labels = deserialize_dataset(tmp_path, "rst")
    assert labels.names == space.names
    originals = {(i.label, i.texts()) for i in split.train}
    loaded = {(i.label, i.texts()) for i in back.train}
    assert originals == loaded


def test_labels_file_order(tmp_path, small_docs):
    split = synth_bso(small_docs, 13, (10, 4, 4))
    serialize_dataset(split, bso_label_space(), tmp_path)
    assert (tmp_path / "bso.labels.txt").read_text() == "reversed\nin_order\n"
