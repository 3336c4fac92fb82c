import json

import pytest

from contentmask.cli import main
from contentmask.metrics import WerResult, results_to_csv
from contentmask.synthetic import make_corpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return make_corpus(tmp_path_factory.mktemp("corpus"), seed=1, n_speakers=1, utts_per_speaker=2)


def test_select(corpus, tmp_path, capsys):
    rc = main(["select", "--textgrid-dir", str(corpus / "textgrids"), "--codes-dir", str(corpus / "codes"),
               "--out", str(tmp_path / "s.csv"), "--eligible-out", str(tmp_path / "ids.txt")])
    assert rc == 0
    assert "2/3 utterances eligible" in capsys.readouterr().out
    assert len((tmp_path / "ids.txt").read_text().split()) == 2


def test_select_min_words_flag(corpus, tmp_path):
    main(["select", "--textgrid-dir", str(corpus / "textgrids"), "--codes-dir", str(corpus / "codes"),
          "--min-words", "6", "--out", str(tmp_path / "s.csv"), "--eligible-out", str(tmp_path / "ids.txt")])
    assert len((tmp_path / "ids.txt").read_text().split()) == 3


def test_mask_flags_override_config(corpus, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        f"textgrid_dir = {corpus / 'textgrids'}\n"
        f"audio_dir = {corpus / 'audio'}\n"
        "domains = wave\n"
        "mask_types = noise, delete, reverse\n"
        f"output_dir = {tmp_path / 'unused'}\n"
    )
    rc = main(["mask", "--config", str(cfg), "--type", "reverse", "--position", "end",
               "--out-dir", str(tmp_path / "run"), "--masker-seed", "4"])
    assert rc == 0
    wavs = sorted((tmp_path / "run" / "masked").rglob("*.wav"))
    assert len(wavs) == 2 and all("wave/reverse/end" in str(p) for p in wavs)
    assert not (tmp_path / "unused").exists()


def test_mask_config_error_exit_code(tmp_path, capsys):
    assert main(["mask", "--textgrid-dir", str(tmp_path / "missing"), "--domain", "wave",
                 "--audio-dir", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_mask_partial_failure_exit_code(corpus, tmp_path):
    audio = tmp_path / "audio"
    audio.mkdir()
    first = sorted((corpus / "audio").glob("*.wav"))[0]
    (audio / first.name).write_bytes(first.read_bytes())
    rc = main(["mask", "--textgrid-dir", str(corpus / "textgrids"), "--audio-dir", str(audio),
               "--domain", "wave", "--no-selection", "--out-dir", str(tmp_path / "run")])
    assert rc == 1


def test_eval_wer_and_ttest(tmp_path, capsys):
    rows = [{"utterance_id": f"u{i}", "reference": "the cat sat on the mat",
             "hypothesis": "the cat sat on a mat" if i % 2 else "the cat sat on the mat"} for i in range(6)]
    (tmp_path / "t.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))
    assert main(["eval-wer", "--transcripts", str(tmp_path / "t.jsonl"), "--out", str(tmp_path / "a.csv")]) == 0
    assert "WER 8.33% over 6 pairs (0 excluded)" in capsys.readouterr().out
    (tmp_path / "b.csv").write_text(results_to_csv([WerResult(f"u{i}", 0, 0, 0, 6, 0.5 + 0.01 * i) for i in range(6)]))
    assert main(["ttest", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--out", str(tmp_path / "t.json")]) == 0
    res = json.loads((tmp_path / "t.json").read_text())
    assert res["n_pairs"] == 6 and res["significant"] is True


def test_eval_asv(tmp_path, capsys):
    lines = [json.dumps({"utterance_id": f"s{s}_{i}", "speaker_id": f"s{s}", "vector": [1.0, s, 0.01 * i]})
             for s in range(2) for i in range(3)]
    (tmp_path / "e.jsonl").write_text("\n".join(lines))
    rc = main(["eval-asv", "--enroll", str(tmp_path / "e.jsonl"), "--test", str(tmp_path / "e.jsonl"),
               "--scores-out", str(tmp_path / "s.csv"), "--eer-out", str(tmp_path / "eer.json")])
    assert rc == 0
    assert "EER 0.00% (6 target, 9 non-target trials)" in capsys.readouterr().out


def test_kde_and_report(tmp_path):
    res = tmp_path / "results" / "wer" / "sys" / "original"
    res.mkdir(parents=True)
    (res / "none.csv").write_text(results_to_csv([WerResult(f"u{i}", 0, 0, 0, 10, 0.1 * (i + 1)) for i in range(5)]))
    (res / "single.csv").write_text(results_to_csv([WerResult("u", 0, 0, 0, 10, 0.1)]))
    rc = main(["kde", f"base={res / 'none.csv'}", f"one={res / 'single.csv'}", "--svg", str(tmp_path / "k.svg")])
    assert rc == 1  # second curve has too few positive values
    assert (tmp_path / "k.svg").exists()
    assert main(["report", "--results-dir", str(tmp_path / "results"), "--out-dir", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "table_wer.csv").exists()
    assert main(["report", "--results-dir", str(tmp_path / "nothing"), "--out-dir", str(tmp_path / "rep2")]) == 2
