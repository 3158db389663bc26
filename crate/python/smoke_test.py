"""Smoke test for the rcw extension module.

Build and install it first, e.g. `maturin develop -m crates/python/Cargo.toml`,
then run `python python/smoke_test.py`.
"""

import json
import pathlib
import sys
import tempfile

import rcw

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "crates" / "core" / "fixtures" / "e2e"


def check(cond, what):
    if not cond:
        sys.exit(f"smoke test failed: {what}")


def main():
    check(rcw.normalize_text("a\r\nb\0") == "a\nb", "normalize_text")
    check(rcw.detect_format(b"%PDF-1.4 ...", "x.txt") == "pdf", "detect_format")
    check(rcw.label_tokens()[0] == "EXPERIENCE" and len(rcw.label_tokens()) == 7, "label_tokens")
    check(rcw.parse_label("skill") == "SKILL", "parse_label")

    sents = rcw.segment("• Led a team of 5. Shipped v2.0 in 2019.\nDr. Smith")
    check([s[1] for s in sents] == ["Led a team of 5.", "Shipped v2.0 in 2019.", "Dr. Smith"], f"segment {sents}")

    text = rcw.format_annotation("r1", [("Jane Doe", "PI"), ("Python\tRust", "skill")])
    check(text == "PI\tJane Doe\nSKILL\tPython Rust\n", repr(text))
    check(rcw.parse_annotation("r1", text) == [("PI", "Jane Doe"), ("SKILL", "Python Rust")], "parse_annotation")

    check(rcw.split_sizes(78000) == [54600, 11700, 11700], "ratio split")
    check(rcw.split_sizes(78000, sizes=[58000, 10000, 10000]) == [58000, 10000, 10000], "size split")

    truth = ["PI", "SKILL", "SKILL", "EXPERIENCE"]
    pred = ["PI", "SKILL", "EXPERIENCE", "EXPERIENCE"]
    check(rcw.f1_micro(truth, pred) == 0.75, "f1_micro")
    check(sum(map(sum, rcw.confusion(truth, pred))) == 4, "confusion")
    feats = rcw.featurize("Senior data engineer", 1 << 10)
    check(abs(sum(v * v for _, v in feats) - 1.0) < 1e-12, "featurize norm")

    rows = [line.split("\t", 1) for p in sorted((FIXTURES / "gold").glob("*.txt")) for line in p.read_text().splitlines()]
    labels, texts = [r[0] for r in rows], [r[1] for r in rows]
    model = rcw.Model.train(texts, labels, epochs=20, learning_rate=1.0, batch_size=16, seed=42)
    again = rcw.Model.train(texts, labels, epochs=20, learning_rate=1.0, batch_size=16, seed=42)
    check(model.to_bytes() == again.to_bytes(), "deterministic training")
    check(rcw.Model.from_bytes(model.to_bytes()).model_id == model.model_id, "model bytes round trip")
    label, probs = model.predict("Bachelor of Science in Computer Science")
    check(label == "EDUCATION" and abs(sum(p for _, p in probs) - 1.0) < 1e-9, f"predict {label}")
    report = model.evaluate(texts, labels)
    check(report["f1_micro"] > 0.95, f"training-set F1 {report['f1_micro']}")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        seg = tmp / "segmented"
        seg.mkdir()
        for i, doc in enumerate(["Jane Doe\nLed a team.", "Python, Rust"]):
            sentences = [
                {"doc_id": f"d{i}", "index": j, "text": t, "span": list(span)} for j, t, span in rcw.segment(doc)
            ]
            (seg / f"d{i}.json").write_text(json.dumps({"doc_id": f"d{i}", "sentences": sentences}))
        ann = rcw.Annotator(str(seg), str(tmp / "export"))
        check(ann.progress()["pending"] == 2, "queue size")
        view = ann.start_session("py")
        sid = view["session_id"]
        while view is not None:
            for s in view["sentences"]:
                ann.submit_label(sid, s["index"], "EXPERIENCE")
            view = ann.complete_resume(sid)["next"]
        check(ann.progress()["done"] == 2, "queue drained")
        check(sorted(p.name for p in (tmp / "export").iterdir()) == ["d0.txt", "d1.txt"], "exports")

        e2e = rcw.run_e2e(str(FIXTURES), str(tmp / "e2e"))
        check(e2e["documents"] == 50 and e2e["test"]["f1_micro"] >= 0.95, f"e2e {e2e['test']['f1_micro']}")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
