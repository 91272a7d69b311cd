"""Feature store format: roundtrips, validation, corruption handling."""

import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cxrsearch.store import (FeatureStore, RecordMeta, StoreError,
                             StoreWriter, meta_sidecar_path, open_store,
                             read_meta, write_store)


def simple_records(n=3, dim=4):
    return [
        (RecordMeta(record_id=f"rec-{i}", label=i % 2, source="synthetic"),
         np.arange(dim, dtype=np.float32) + dim * i)
        for i in range(n)
    ]


@pytest.fixture
def store_path(tmp_path):
    return tmp_path / "fixture.cxrf"


class TestWriteStore:
    def test_three_record_layout(self, store_path):
        write_store(simple_records(), store_path)
        raw = store_path.read_bytes()
        assert raw[:8] == b"CXRFEAT\0"
        assert len(raw) == 24 + 3 * 4 * 4  # header + 48 payload bytes
        payload = np.frombuffer(raw[24:], dtype="<f4").reshape(3, 4)
        assert np.array_equal(payload, np.arange(12, dtype=np.float32).reshape(3, 4))

    def test_empty_record_list(self, store_path):
        with pytest.raises(ValueError, match="empty store"):
            write_store([], store_path)

    def test_dimension_mismatch(self, store_path):
        records = simple_records()
        records[2] = (records[2][0], np.zeros(5, dtype=np.float32))
        with pytest.raises(ValueError, match="dimension mismatch"):
            write_store(records, store_path)
        assert not store_path.exists()

    def test_non_finite_value(self, store_path):
        records = simple_records()
        bad = records[1][1].copy()
        bad[0] = np.nan
        records[1] = (records[1][0], bad)
        with pytest.raises(ValueError, match="non-finite"):
            write_store(records, store_path)

    def test_duplicate_record_id(self, store_path):
        records = simple_records()
        records[2] = (RecordMeta("rec-0", 1, "synthetic"), records[2][1])
        with pytest.raises(ValueError, match="duplicate record_id 'rec-0'"):
            write_store(records, store_path)

    def test_bad_label_and_source(self, store_path):
        with pytest.raises(ValueError, match="label"):
            write_store([(RecordMeta("a", 2, "synthetic"),
                          np.zeros(2, np.float32))], store_path)
        with pytest.raises(ValueError, match="source"):
            write_store([(RecordMeta("a", 1, "nope"),
                          np.zeros(2, np.float32))], store_path)

    def test_random_payload_bitwise(self, store_path):
        rng = np.random.default_rng(7)
        vectors = rng.standard_normal((1000, 32)).astype(np.float32)
        records = [
            (RecordMeta(f"r{i}", int(rng.integers(0, 2)), "synthetic"),
             vectors[i])
            for i in range(1000)
        ]
        write_store(records, store_path)
        reread = np.frombuffer(store_path.read_bytes()[24:],
                               dtype="<f4").reshape(1000, 32)
        assert reread.tobytes() == vectors.tobytes()


class TestOpenStore:
    def test_roundtrip(self, store_path):
        write_store(simple_records(), store_path)
        store = open_store(store_path)
        assert store.n_records == 3
        assert store.dim == 4
        assert [m.record_id for m in store.meta] == ["rec-0", "rec-1", "rec-2"]
        assert store.labels.tolist() == [0, 1, 0]

    def test_bad_magic(self, store_path):
        write_store(simple_records(), store_path)
        raw = bytearray(store_path.read_bytes())
        raw[0] = ord("X")
        store_path.write_bytes(bytes(raw))
        with pytest.raises(StoreError, match="bad magic"):
            open_store(store_path)

    def test_bad_version(self, store_path):
        write_store(simple_records(), store_path)
        raw = bytearray(store_path.read_bytes())
        raw[8] = 99
        store_path.write_bytes(bytes(raw))
        with pytest.raises(StoreError, match="version"):
            open_store(store_path)

    def test_truncated_payload(self, store_path):
        write_store(simple_records(), store_path)
        raw = store_path.read_bytes()
        store_path.write_bytes(raw[:-1])
        with pytest.raises(StoreError, match="truncated payload"):
            open_store(store_path)

    def test_meta_count_mismatch(self, store_path):
        write_store(simple_records(), store_path)
        sidecar = meta_sidecar_path(store_path)
        lines = sidecar.read_text().splitlines()
        sidecar.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(StoreError, match="count mismatch"):
            open_store(store_path)

    def test_open_does_not_mutate(self, store_path):
        write_store(simple_records(), store_path)
        before = hashlib.sha256(store_path.read_bytes()).hexdigest()
        store = open_store(store_path)
        store.get_vector(1)
        np.asarray(store.vectors).sum()
        after = hashlib.sha256(store_path.read_bytes()).hexdigest()
        assert before == after

    def test_memory_mapped(self, store_path):
        write_store(simple_records(), store_path)
        store = open_store(store_path)
        assert isinstance(store.vectors, np.memmap)

    def test_sidecar_comment_lines_skipped(self, store_path):
        write_store(simple_records(), store_path)
        sidecar = meta_sidecar_path(store_path)
        sidecar.write_text("# extractor: test v0\n" + sidecar.read_text())
        store = open_store(store_path)
        assert store.n_records == 3


class TestGetVector:
    def test_first_row(self, store_path):
        write_store(simple_records(), store_path)
        store = open_store(store_path)
        assert store.get_vector(0).tolist() == [0.0, 1.0, 2.0, 3.0]

    def test_out_of_range(self, store_path):
        write_store(simple_records(), store_path)
        store = open_store(store_path)
        with pytest.raises(IndexError):
            store.get_vector(3)
        with pytest.raises(IndexError):
            store.get_vector(-1)

    def test_view_is_read_only_and_uncopied(self, store_path):
        write_store(simple_records(), store_path)
        store = open_store(store_path)
        row = store.get_vector(1)
        assert not row.flags.writeable
        assert row.base is not None

    def test_random_rows_match_originals(self, store_path):
        rng = np.random.default_rng(3)
        records = [
            (RecordMeta(f"r{i}", 0, "synthetic"),
             rng.standard_normal(16).astype(np.float32))
            for i in range(50)
        ]
        write_store(records, store_path)
        store = open_store(store_path)
        for i in rng.integers(0, 50, size=10):
            assert np.array_equal(store.get_vector(int(i)), records[i][1])


class TestFromArrays:
    def test_valid(self):
        store = FeatureStore.from_arrays(
            np.zeros((2, 3), np.float32),
            [RecordMeta("a", 0, "synthetic"), RecordMeta("b", 1, "synthetic")])
        assert store.n_records == 2 and store.dim == 3
        assert not store.vectors.flags.writeable

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ValueError, match="duplicate"):
            FeatureStore.from_arrays(
                np.zeros((2, 3), np.float32),
                [RecordMeta("a", 0, "synthetic"),
                 RecordMeta("a", 1, "synthetic")])


class TestStreamingWriter:
    def test_batched_append_matches_write_store(self, tmp_path):
        rng = np.random.default_rng(0)
        vectors = rng.standard_normal((10, 4)).astype(np.float32)
        meta = [RecordMeta(f"r{i}", i % 2, "chexpert") for i in range(10)]
        a, b = tmp_path / "a.cxrf", tmp_path / "b.cxrf"
        write_store(list(zip(meta, vectors)), a)
        with StoreWriter(b, dim=4) as writer:
            writer.append(meta[:4], vectors[:4])
            writer.append(meta[4:], vectors[4:])
        assert a.read_bytes() == b.read_bytes()
        assert meta_sidecar_path(a).read_text() == meta_sidecar_path(b).read_text()

    def test_duplicate_across_batches(self, tmp_path):
        writer = StoreWriter(tmp_path / "c.cxrf", dim=2)
        writer.append([RecordMeta("x", 0, "synthetic")], np.zeros((1, 2), np.float32))
        with pytest.raises(ValueError, match="duplicate"):
            writer.append([RecordMeta("x", 1, "synthetic")],
                          np.ones((1, 2), np.float32))


record_ids = st.lists(
    st.text(st.characters(min_codepoint=33, max_codepoint=126,
                          exclude_characters=",#"),
            min_size=1, max_size=12),
    min_size=1, max_size=8, unique=True)


@settings(max_examples=25, deadline=None)
@given(ids=record_ids, dim=st.integers(1, 9), data=st.data())
def test_roundtrip_property(tmp_path_factory, ids, dim, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    vectors = rng.standard_normal((len(ids), dim)).astype(np.float32)
    records = [
        (RecordMeta(rid,
                    data.draw(st.integers(0, 1)),
                    data.draw(st.sampled_from(
                        ["mimic-cxr", "chexpert", "chestxray14", "synthetic"]))),
         vectors[i])
        for i, rid in enumerate(ids)
    ]
    path = tmp_path_factory.mktemp("prop") / "p.cxrf"
    write_store(records, path)
    store = open_store(path)
    assert store.n_records == len(ids)
    for i, (m, vec) in enumerate(records):
        assert store.meta[i] == m
        assert store.get_vector(i).tobytes() == vec.tobytes()
