import csv
import json
from fractions import Fraction
from pathlib import Path

import pytest

from lyriceval.cli import main
from lyriceval.corpus import (
    ConfigurationError,
    EvalOptions,
    emit_report,
    evaluate_corpus,
    evaluate_song,
    load_corpus,
    summary_from_dict,
    write_plot_data,
)
from lyriceval.metrics import OpCounts, SongReport, _metrics, aggregate
from lyriceval.tokenizer import TokenType

from conftest import FIXTURES

L = TokenType.LINE_BREAK


def write(root: Path, rel: str, text, binary=False):
    path = root / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    if binary:
        path.write_bytes(text)
    else:
        path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def roots(tmp_path):
    ref, hyp = tmp_path / "ref", tmp_path / "hyp"
    ref.mkdir()
    hyp.mkdir()
    return ref, hyp


def oracle_word_distance(a: list[str], b: list[str]) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def plain_words(text: str) -> list[str]:
    # deliberately different from the tokenizer: whitespace split, edge strip
    return [w.strip(",.?!()").casefold() for w in text.split() if w.strip(",.?!()")]


class TestLoadCorpus:
    def test_pairing_and_language(self, roots):
        ref, hyp = roots
        write(ref, "en/song1.txt", "a")
        write(hyp, "en/song1.txt", "a")
        corpus = load_corpus(ref, hyp)
        assert len(corpus) == 1
        (entry,) = corpus.entries
        assert (entry.song_id, entry.language) == ("en/song1", "en")

    def test_unknown_language_dir(self, roots):
        ref, hyp = roots
        write(ref, "misc/x.txt", "a")
        write(ref, "top.txt", "a")
        write(ref, "pt-BR/y.txt", "a")
        corpus = load_corpus(ref, hyp)
        assert {e.song_id: e.language for e in corpus.entries} == {
            "misc/x": "und", "top": "und", "pt-BR/y": "pt-BR",
        }

    def test_empty_dirs(self, roots):
        with pytest.raises(ConfigurationError, match="no pairs found"):
            load_corpus(*roots)

    def test_missing_root(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_corpus(tmp_path / "nope", tmp_path)

    def test_missing_hypothesis_scored_empty(self, roots):
        ref, hyp = roots
        write(ref, "de/song2.txt", "eins zwei drei")
        corpus = load_corpus(ref, hyp)
        assert corpus.missing()[0].song_id == "de/song2"
        run = evaluate_corpus(corpus)
        assert run.songs[0].missing_hypothesis
        assert run.songs[0].wer == 1.0

    def test_skip_missing(self, roots):
        ref, hyp = roots
        write(ref, "en/a.txt", "x y")
        write(hyp, "en/a.txt", "x y")
        write(ref, "en/b.txt", "z")
        run = evaluate_corpus(load_corpus(ref, hyp), EvalOptions(skip_missing=True))
        assert [s.song_id for s in run.songs] == ["en/a"]
        assert run.overall.wer == 0

    def test_orphans_reported(self, roots):
        ref, hyp = roots
        write(ref, "a.txt", "x")
        write(hyp, "a.txt", "x")
        write(hyp, "b.txt", "y")
        corpus = load_corpus(ref, hyp)
        assert [p.name for p in corpus.orphan_hypotheses] == ["b.txt"]
        data = json.loads(emit_report(evaluate_corpus(corpus)))
        assert data["orphan_hypotheses"][0].endswith("b.txt")

    def test_language_filter(self, roots):
        ref, hyp = roots
        write(ref, "en/a.txt", "x")
        write(ref, "fr/b.txt", "y")
        assert [e.language for e in load_corpus(ref, hyp, language_filter="fr").entries] == ["fr"]
        with pytest.raises(ConfigurationError):
            load_corpus(ref, hyp, language_filter="de")

    def test_manifest(self, roots, tmp_path):
        ref, hyp = roots
        write(ref, "one.txt", "a")
        write(hyp, "h1.txt", "a")
        manifest = write(
            tmp_path, "m.csv",
            "song_id,language,reference_path,hypothesis_path\ns1,es,one.txt,h1.txt\ns2,es,one.txt,\n",
        )
        corpus = load_corpus(ref, hyp, manifest)
        assert [(e.song_id, e.language, e.missing_hypothesis) for e in corpus.entries] == [
            ("s1", "es", False), ("s2", "es", True),
        ]

    def test_manifest_duplicate(self, roots, tmp_path):
        ref, hyp = roots
        write(ref, "one.txt", "a")
        manifest = write(
            tmp_path, "m.csv",
            "song_id,language,reference_path,hypothesis_path\ns1,en,one.txt,\ns1,en,one.txt,\n",
        )
        with pytest.raises(ConfigurationError, match="duplicate"):
            load_corpus(ref, hyp, manifest)

    def test_manifest_unreadable_reference(self, roots, tmp_path):
        ref, hyp = roots
        manifest = write(
            tmp_path, "m.csv", "song_id,language,reference_path,hypothesis_path\ns1,en,gone.txt,\n"
        )
        with pytest.raises(ConfigurationError, match="gone.txt"):
            load_corpus(ref, hyp, manifest)


class TestEvaluateSong:
    def test_identical(self):
        text = (FIXTURES / "crowd_pleaser_revised.txt").read_text(encoding="utf-8")
        report = evaluate_song(text, text)
        assert report.wer == 0 and report.wer_case == 0
        assert report.prf(L).f1 == 1 and report.prf(TokenType.SECTION_BREAK).f1 == 1

    def test_crowd_pleaser_revision(self):
        ref_text = (FIXTURES / "crowd_pleaser_revised.txt").read_text(encoding="utf-8")
        hyp_text = (FIXTURES / "crowd_pleaser_original.txt").read_text(encoding="utf-8")
        report = evaluate_song(ref_text, hyp_text)
        ref_words, hyp_words = plain_words(ref_text), plain_words(hyp_text)
        assert report.counts.N == len(ref_words) == 162
        assert report.counts.words.hyp_total == len(hyp_words)
        errors = oracle_word_distance(ref_words, hyp_words)
        assert report.counts.words.errors == errors == 32
        assert report.wer == 32 / 162
        # 21 reference lines, 25 hypothesis lines, one section break each
        assert report.counts[L].ref_total == 20 and report.counts[L].hyp_total == 24
        assert report.prf(L).f1 == pytest.approx(9 / 11)
        assert report.prf(TokenType.SECTION_BREAK).f1 == 1
        assert report.counts.case_errors == 23
        assert report.prf(TokenType.PUNCT).precision is None

    def test_pas_que_tes_pas_revision(self):
        ref_text = (FIXTURES / "pas_que_tes_pas_revised.txt").read_text(encoding="utf-8")
        hyp_text = (FIXTURES / "pas_que_tes_pas_original.txt").read_text(encoding="utf-8")
        report = evaluate_song(ref_text, hyp_text)
        ref_words, hyp_words = plain_words(ref_text), plain_words(hyp_text)
        assert report.counts.N == len(ref_words) == 124
        assert report.counts.words.errors == oracle_word_distance(ref_words, hyp_words) == 37

    def test_parens_only_in_reference(self):
        report = evaluate_song("Do it (ah)", "do it ah")
        prf = report.prf(TokenType.PAREN)
        assert prf.recall == 0 and prf.precision is None and prf.f1 is None

    def test_empty_reference_unevaluable(self):
        report = evaluate_song("...\n(!)", "hello")
        assert report.unevaluable == "reference contains no words"

    def test_deterministic(self):
        a = evaluate_song("A, b\nc", "a b c", EvalOptions(lint=True))
        b = evaluate_song("A, b\nc", "a b c", EvalOptions(lint=True))
        assert a == b

    def test_postprocess_steps(self):
        opts = EvalOptions(postprocess=("strip", "capitalize"))
        report = evaluate_song("Hello world\nBye", "hello world.\nbye,", opts)
        assert report.wer_case == 0
        assert report.prf(TokenType.PUNCT) == (None, None, None)

    def test_strict_parens(self):
        opts = EvalOptions(postprocess=("strip",), strict_parens=True)
        report = evaluate_song("Yes (ah)", "Yes (ah)", opts)
        assert report.counts[TokenType.PAREN] == OpCounts(hits=1, deletions=1)

    def test_segments(self):
        segs = json.dumps([{"text": "Hello world"}, {"text": "Goodbye"}])
        lines = evaluate_song("Hello world\nGoodbye", segs, EvalOptions(("lines",), segments_json=True))
        flat = evaluate_song("Hello world\nGoodbye", segs, EvalOptions(segments_json=True))
        assert lines.prf(L).f1 == 1
        assert flat.prf(L).recall == 0
        assert lines.wer == flat.wer == 0

    def test_swd_applies_to_reference(self):
        report = evaluate_song("mein Herz; und.", "Mein Herz, und", EvalOptions(swd=True))
        assert report.wer_case == 0 and report.prf(TokenType.PUNCT).f1 == 1

    def test_lint_attached(self):
        report = evaluate_song("Hello,", "hello", EvalOptions(lint=True))
        assert [f["rule"] for f in report.lint["reference"]] == ["R5"]
        assert [f["rule"] for f in report.lint["hypothesis"]] == ["R4"]

    def test_unknown_step(self):
        with pytest.raises(ConfigurationError):
            EvalOptions(postprocess=("shout",))


@pytest.fixture
def two_language_corpus(roots):
    ref, hyp = roots
    write(ref, "en/a.txt", "Hello world (yeah)\n\nBye now")
    write(hyp, "en/a.txt", "hello world yeah\nbye now")
    write(ref, "en/b.txt", "One, two")
    write(hyp, "en/b.txt", "One two three")
    write(ref, "fr/c.txt", "Je t'aime\nMoi non plus")
    write(hyp, "fr/c.txt", "Je t'aime moi non plus")
    return ref, hyp


class TestReports:
    def test_json_structure(self, two_language_corpus):
        run = evaluate_corpus(load_corpus(*two_language_corpus))
        data = json.loads(emit_report(run, "json"))
        assert {"songs", "by_language", "overall", "options", "version"} <= set(data)
        assert set(data["by_language"]) == {"en", "fr"}
        assert data["aggregation"] == "micro"
        song = next(s for s in data["songs"] if s["song_id"] == "en/b")
        assert song["metrics"]["F_B"] is None

    def test_single_song_overall_equals_song(self, roots):
        ref, hyp = roots
        write(ref, "x.txt", "A b, c\nd")
        write(hyp, "x.txt", "a b c d")
        data = json.loads(emit_report(evaluate_corpus(load_corpus(ref, hyp))))
        assert data["overall"]["metrics"] == data["songs"][0]["metrics"]

    def test_csv(self, two_language_corpus):
        run = evaluate_corpus(load_corpus(*two_language_corpus))
        rows = list(csv.DictReader(emit_report(run, "csv").decode().splitlines()))
        assert [r["scope"] for r in rows] == ["song"] * 3 + ["language"] * 2 + ["overall"]
        b = next(r for r in rows if r["song_id"] == "en/b")
        assert b["F_B"] == "—"
        assert b["wer"] == "50.0"
        assert rows[-1]["language"] == "all"

    def test_deterministic_modulo_timestamp(self, two_language_corpus):
        manifest = load_corpus(*two_language_corpus)
        a = json.loads(emit_report(evaluate_corpus(manifest)))
        b = json.loads(emit_report(evaluate_corpus(manifest)))
        a.pop("timestamp")
        b.pop("timestamp")
        assert a == b

    def test_round_trip_from_embedded_counts(self, two_language_corpus):
        data = json.loads(emit_report(evaluate_corpus(load_corpus(*two_language_corpus))))
        for entry in data["songs"] + list(data["by_language"].values()) + [data["overall"]]:
            counts, word_ops, _ = summary_from_dict(entry)
            assert _metrics(counts) == entry["metrics"]
            n = counts.N
            assert Fraction(counts.words.errors, n) == Fraction(entry["metrics"]["wer"]).limit_denominator(10**6)
            if entry.get("word_op_frequencies"):
                assert word_ops.frequencies().as_dict() == entry["word_op_frequencies"]

    def test_aggregate_rows_are_micro_sums(self, two_language_corpus):
        data = json.loads(emit_report(evaluate_corpus(load_corpus(*two_language_corpus))))
        reports = []
        for s in data["songs"]:
            counts, word_ops, confusion = summary_from_dict(s)
            reports.append(SongReport(s["song_id"], s["language"], counts, word_ops, confusion))
        overall = aggregate(reports)
        assert overall.metrics() == data["overall"]["metrics"]
        assert overall.counts.as_dict() == data["overall"]["counts"]
        en = aggregate([r for r in reports if r.language == "en"])
        assert en.metrics() == data["by_language"]["en"]["metrics"]

    def test_unknown_format(self, two_language_corpus):
        run = evaluate_corpus(load_corpus(*two_language_corpus))
        with pytest.raises(ConfigurationError):
            emit_report(run, "xml")

    def test_plot_data(self, two_language_corpus, tmp_path):
        run = evaluate_corpus(load_corpus(*two_language_corpus))
        paths = write_plot_data(run, tmp_path / "plots")
        assert sorted(p.name for p in paths) == ["confusion.csv", "song_wer.csv", "word_ops.csv"]
        ops = list(csv.DictReader((tmp_path / "plots" / "word_ops.csv").open()))
        assert [r["group"] for r in ops] == ["en", "fr", "all"]
        for r in ops:
            total = sum(float(r[k]) for k in ("hit", "case", "near", "sub", "del"))
            assert total == pytest.approx(1)
        grid = list(csv.DictReader((tmp_path / "plots" / "confusion.csv").open()))
        assert len(grid) == 3 * 25


class TestCli:
    def test_ok(self, two_language_corpus, tmp_path, capsys):
        ref, hyp = two_language_corpus
        out = tmp_path / "r.json"
        assert main(["--reference", str(ref), "--hypothesis", str(hyp), "-o", str(out), "--lint"]) == 0
        data = json.loads(out.read_text())
        assert len(data["songs"]) == 3 and "lint" in data["songs"][0]

    def test_stdout_csv_and_per_song(self, two_language_corpus, capsys):
        ref, hyp = two_language_corpus
        code = main(["--reference", str(ref), "--hypothesis", str(hyp), "--format", "csv", "--per-song"])
        assert code == 0
        captured = capsys.readouterr()
        assert captured.out.startswith("scope,song_id")
        assert "en/a" in captured.err

    def test_unevaluable_exit_code(self, roots, capsys):
        ref, hyp = roots
        write(ref, "a.txt", "fine words")
        write(hyp, "a.txt", "fine words")
        write(ref, "b.txt", b"bad \xff bytes", binary=True)
        write(hyp, "b.txt", "x")
        assert main(["--reference", str(ref), "--hypothesis", str(hyp)]) == 1
        data = json.loads(capsys.readouterr().out)
        bad = next(s for s in data["songs"] if s["song_id"] == "b")
        assert bad["status"] == "unevaluable" and "byte offset 4" in bad["reason"]
        assert data["overall"]["songs"] == 1

    def test_config_error_exit_code(self, roots, capsys):
        assert main(["--reference", str(roots[0]), "--hypothesis", str(roots[1])]) == 2
        assert "no pairs found" in capsys.readouterr().err

    def test_bad_parallel(self, two_language_corpus):
        ref, hyp = two_language_corpus
        assert main(["--reference", str(ref), "--hypothesis", str(hyp), "--parallel", "0"]) == 2

    def test_bad_postprocess_step(self, two_language_corpus):
        ref, hyp = two_language_corpus
        with pytest.raises(SystemExit) as info:
            main(["--reference", str(ref), "--hypothesis", str(hyp), "--postprocess", "lines,bogus"])
        assert info.value.code == 2

    def test_segments_json(self, roots, capsys):
        ref, hyp = roots
        write(ref, "a.txt", "Hello world\nGoodbye")
        write(hyp, "a.txt", json.dumps([{"start": 0, "end": 1.5, "text": "hello world."}, {"text": "goodbye"}]))
        hyp_json = hyp / "a.json"
        (hyp / "a.txt").rename(hyp_json)
        args = ["--reference", str(ref), "--hypothesis", str(hyp), "--segments-json",
                "--postprocess", "lines,strip,capitalize"]
        assert main(args) == 0
        metrics = json.loads(capsys.readouterr().out)["songs"][0]["metrics"]
        assert metrics["wer_case"] == 0 and metrics["F_L"] == 1

    def test_bad_segments_json(self, roots, capsys):
        ref, hyp = roots
        write(ref, "a.txt", "Hello")
        write(hyp, "a.json", "{not json")
        assert main(["--reference", str(ref), "--hypothesis", str(hyp), "--segments-json"]) == 1

    def test_plot_data_flag(self, two_language_corpus, tmp_path, capsys):
        ref, hyp = two_language_corpus
        plots = tmp_path / "plots"
        assert main(["--reference", str(ref), "--hypothesis", str(hyp), "--plot-data", str(plots)]) == 0
        assert (plots / "song_wer.csv").exists()

    def test_parallel_matches_serial(self, two_language_corpus, capsys):
        ref, hyp = two_language_corpus
        main(["--reference", str(ref), "--hypothesis", str(hyp)])
        serial = json.loads(capsys.readouterr().out)
        main(["--reference", str(ref), "--hypothesis", str(hyp), "--parallel", "4"])
        parallel = json.loads(capsys.readouterr().out)
        for d in (serial, parallel):
            d.pop("timestamp")
        assert serial == parallel

    def test_unwritable_output(self, two_language_corpus, tmp_path):
        ref, hyp = two_language_corpus
        out = tmp_path / "missing-dir" / "r.json"
        assert main(["--reference", str(ref), "--hypothesis", str(hyp), "-o", str(out)]) == 2
