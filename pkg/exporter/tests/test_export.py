import json
import numpy as np
import pytest

from embed_exporter.cli import main as cli_main
from embed_exporter.export import ExportError, ExportJob, export
from embed_exporter.store import StoreFormatError, read_store, write_store


def write_dataset(path, n, id_prefix=""):
    tasks = ["forward", "retrosynthesis", "reagent"]
    with path.open("w", encoding="utf-8") as fh:
        for i in range(n):
            fh.write(
                json.dumps(
                    {
                        "id": f"{id_prefix}{i}" if id_prefix else None,
                        "task": tasks[i % 3],
                        "instruction": "do the thing",
                        "input": f"CCO{'C' * (i % 4)}",
                        "output": f"CCN{'C' * (i % 3)}",
                    }
                )
                + "\n"
            )


def write_templates(path, per_task=2):
    obj = {
        task: [f"{task} template {i}" for i in range(per_task)]
        for task in ("forward", "retrosynthesis", "reagent")
    }
    path.write_text(json.dumps(obj), encoding="utf-8")


class TestStoreFormat:
    def test_write_read_round_trip_bytes(self, tmp_path):
        entries = {
            "a:input": np.array([1.0, 2.0, 3.0], dtype=np.float32),
            "template:forward:0": np.array([-1.0, 0.5, 0.0], dtype=np.float32),
        }
        path = tmp_path / "s.embs"
        write_store(path, 3, entries)
        raw = path.read_bytes()
        assert raw[:4] == b"EMBS"
        dim, loaded = read_store(path)
        assert dim == 3
        assert list(loaded) == list(entries)
        rewritten = tmp_path / "s2.embs"
        write_store(rewritten, dim, loaded)
        assert rewritten.read_bytes() == raw

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "s.embs"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(StoreFormatError, match="magic"):
            read_store(path)

    def test_wrong_vector_shape(self, tmp_path):
        with pytest.raises(StoreFormatError, match="shape"):
            write_store(tmp_path / "s.embs", 3, {"k": np.zeros(2, dtype=np.float32)})

    def test_no_partial_file_on_error(self, tmp_path):
        target = tmp_path / "s.embs"
        try:
            write_store(target, 2, {"k": np.zeros(3, dtype=np.float32)})
        except StoreFormatError:
            pass
        assert not target.exists()
        assert list(tmp_path.iterdir()) == []


class TestExport:
    def test_key_arithmetic_three_records(self, tmp_path):
        dataset = tmp_path / "d.jsonl"
        templates = tmp_path / "t.json"
        write_dataset(dataset, 3)
        write_templates(templates, per_task=12)
        out = tmp_path / "out.embs"
        summary = export(
            ExportJob(str(dataset), str(templates), "hash:16", str(out))
        )
        assert summary["entries"] == 3 * 2 + 36 == 42
        dim, entries = read_store(out)
        assert dim == 16
        assert len(entries) == 42

    def test_missing_id_defaults_to_line_index(self, tmp_path):
        dataset = tmp_path / "d.jsonl"
        templates = tmp_path / "t.json"
        write_dataset(dataset, 2)
        write_templates(templates)
        out = tmp_path / "out.embs"
        export(ExportJob(str(dataset), str(templates), "hash:8", str(out)))
        _, entries = read_store(out)
        assert "0:input" in entries and "1:output" in entries

    def test_deterministic_same_job_twice(self, tmp_path):
        dataset = tmp_path / "d.jsonl"
        templates = tmp_path / "t.json"
        write_dataset(dataset, 10, id_prefix="r")
        write_templates(templates)
        out1, out2 = tmp_path / "a.embs", tmp_path / "b.embs"
        export(ExportJob(str(dataset), str(templates), "hash:24", str(out1), batch_size=3))
        export(ExportJob(str(dataset), str(templates), "hash:24", str(out2), batch_size=7))
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_inputs_rejected(self, tmp_path):
        templates = tmp_path / "t.json"
        write_templates(templates)
        with pytest.raises(ExportError, match="dataset not found"):
            export(ExportJob(str(tmp_path / "no.jsonl"), str(templates), "hash:8", "x"))

    def test_unloadable_encoder(self, tmp_path):
        dataset = tmp_path / "d.jsonl"
        templates = tmp_path / "t.json"
        write_dataset(dataset, 1)
        write_templates(templates)
        from embed_exporter.encoders import EncoderError

        with pytest.raises(EncoderError):
            export(
                ExportJob(
                    str(dataset), str(templates),
                    str(tmp_path / "not-a-model"), str(tmp_path / "o.embs"),
                )
            )


class TestPrimaryInterop:
    def test_store_loads_in_primary_pipeline(self, tmp_path):
        rxnprompt = pytest.importorskip("rxnprompt")
        from rxnprompt.embedding import EmbeddingStore, FileStoreProvider, record_key, template_key
        from rxnprompt.records import load_dataset

        dataset = tmp_path / "d.jsonl"
        templates = tmp_path / "t.json"
        write_dataset(dataset, 10, id_prefix="r")
        write_templates(templates, per_task=12)
        out = tmp_path / "store.embs"
        summary = export(ExportJob(str(dataset), str(templates), "hash:32", str(out)))
        assert summary["dim"] == 32

        store = EmbeddingStore.load(out)
        assert store.dim == 32
        provider = FileStoreProvider(store)
        records = load_dataset(dataset)
        keys = [record_key(r.id, f) for r in records for f in ("input", "output")]
        keys += [
            template_key(task, i)
            for task in ("forward", "retrosynthesis", "reagent")
            for i in range(12)
        ]
        missing = [k for k in keys if k not in store]
        assert missing == []
        vectors = provider.embed(keys)
        assert all(v.shape == (32,) for v in vectors)

    def test_bit_exact_round_trip_through_primary(self, tmp_path):
        pytest.importorskip("rxnprompt")
        from rxnprompt.embedding import EmbeddingStore

        dataset = tmp_path / "d.jsonl"
        templates = tmp_path / "t.json"
        write_dataset(dataset, 4)
        write_templates(templates)
        out = tmp_path / "store.embs"
        export(ExportJob(str(dataset), str(templates), "hash:8", str(out)))
        raw = out.read_bytes()
        resaved = tmp_path / "resaved.embs"
        EmbeddingStore.load(out).save(resaved)
        assert resaved.read_bytes() == raw


class TestTransformerEncoder:
    @pytest.fixture()
    def tiny_model_dir(self, tmp_path):
        torch = pytest.importorskip("torch")
        transformers = pytest.importorskip("transformers")
        from transformers import BertConfig, BertModel, BertTokenizer

        vocab = [
            "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
            "c", "o", "n", "1", "2", "(", ")", "=", "template", "forward",
        ]
        model_dir = tmp_path / "tiny-bert"
        model_dir.mkdir()
        (model_dir / "vocab.txt").write_text("\n".join(vocab), encoding="utf-8")
        config = BertConfig(
            vocab_size=len(vocab), hidden_size=16, num_hidden_layers=1,
            num_attention_heads=2, intermediate_size=32, max_position_embeddings=64,
        )
        torch.manual_seed(0)
        model = BertModel(config)
        model.save_pretrained(model_dir)
        tokenizer = BertTokenizer(str(model_dir / "vocab.txt"))
        tokenizer.save_pretrained(model_dir)
        return model_dir

    def test_export_with_local_transformer(self, tmp_path, tiny_model_dir):
        dataset = tmp_path / "d.jsonl"
        templates = tmp_path / "t.json"
        write_dataset(dataset, 4)
        write_templates(templates)
        out1 = tmp_path / "a.embs"
        out2 = tmp_path / "b.embs"
        for out, pooling, batch in ((out1, "mean", 3), (out2, "mean", 5)):
            summary = export(
                ExportJob(
                    str(dataset), str(templates), str(tiny_model_dir), str(out),
                    pooling=pooling, batch_size=batch,
                )
            )
            assert summary["dim"] == 16
        dim, entries = read_store(out1)
        assert dim == 16 and len(entries) == 4 * 2 + 6
        # fixed weights on disk -> byte-identical output across runs
        dim2, entries2 = read_store(out2)
        for key in entries:
            assert np.allclose(entries[key], entries2[key], atol=1e-5)

    def test_first_token_pooling_differs_from_mean(self, tmp_path, tiny_model_dir):
        dataset = tmp_path / "d.jsonl"
        templates = tmp_path / "t.json"
        write_dataset(dataset, 2)
        write_templates(templates)
        mean_out = tmp_path / "mean.embs"
        first_out = tmp_path / "first.embs"
        export(ExportJob(str(dataset), str(templates), str(tiny_model_dir), str(mean_out)))
        export(
            ExportJob(
                str(dataset), str(templates), str(tiny_model_dir), str(first_out),
                pooling="first-token",
            )
        )
        _, mean_entries = read_store(mean_out)
        _, first_entries = read_store(first_out)
        assert any(
            not np.allclose(mean_entries[k], first_entries[k]) for k in mean_entries
        )


class TestCli:
    def test_cli_round_trip(self, tmp_path, capsys):
        dataset = tmp_path / "d.jsonl"
        templates = tmp_path / "t.json"
        write_dataset(dataset, 5)
        write_templates(templates)
        out = tmp_path / "s.embs"
        code = cli_main([
            "--dataset", str(dataset), "--templates", str(templates),
            "--encoder", "hash:12", "--output", str(out),
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["entries"] == 5 * 2 + 6
        assert out.exists()

    def test_cli_error_is_json_line(self, tmp_path, capsys):
        code = cli_main([
            "--dataset", str(tmp_path / "missing.jsonl"),
            "--templates", str(tmp_path / "missing.json"),
            "--encoder", "hash:8", "--output", str(tmp_path / "o.embs"),
        ])
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert "missing.jsonl" in err["error"]
