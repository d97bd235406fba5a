"""Generate the bundled synthetic QA mini-corpus.

Writes, under src/redactkit/data/:
  mini_qa.jsonl              QA records
  mini_qa.annotations.jsonl  external NER spans (name/place/org/date/... only,
                             plus a few deliberate overlaps and duplicates)
  mini_qa.truth.jsonl        the disjoint entity set the generator planted,
                             including pattern-detectable ones
  mini_qa.predictions.jsonl  a toy prediction file for `redactkit score`

Deterministic: rerunning produces byte-identical files.
"""

import argparse
import json
import unicodedata
from pathlib import Path

from redactkit.sample import SplitMix64

PERSONS = ["Marie Curie", "Zoë Ångström", "José Núñez", "Ada Lovelace", "Kenji Sato", "Amara Okafor", "Lena Fischer", "Omar Haddad"]
GPES = ["Paris", "São Paulo", "Kyoto", "Nairobi", "Reykjavík", "Toronto"]
LOCS = ["the Alps", "Lake Geneva", "the Sahara", "Mount Fuji"]
ORGS = ["Acme Corp", "Red Cross", "Globex", "Initech", "Royal Society"]
DATES = ["March 3, 1998", "June 2012", "the spring of 1871", "August 14, 2003"]
WORKS = ["The Silent Sea", "Blue Hours", "Letters from Home"]
QUANTS = ["40 kilograms", "three miles", "12 liters"]
TOPICS = ["chemistry", "botany", "tidal physics", "medieval poetry", "glass blowing", "cartography", "beekeeping"]

NER_LABELS = {"PERSON", "GPE", "LOC", "ORG", "DATE", "WORK_OF_ART", "QUANTITY"}


def luhn_complete(body: str) -> str:
    total = 0
    for i, c in enumerate(reversed(body)):
        d = int(c)
        if i % 2 == 0:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return body + str((10 - total % 10) % 10)


class Builder:
    def __init__(self):
        self.parts = []
        self.n = 0
        self.truth = []
        self.annotations = []

    def text(self, s):
        self.parts.append(s)
        self.n += len(s)

    def ent(self, s, label):
        start = self.n
        self.text(s)
        span = {"start": start, "end": self.n, "label": label}
        self.truth.append(span)
        if label in NER_LABELS:
            self.annotations.append(dict(span))
        return start

    def value(self):
        return "".join(self.parts)


def pick(rng, seq):
    return seq[rng.below(len(seq))]


def make_record(i, rng):
    b = Builder()
    answers = []
    topic = pick(rng, TOPICS)
    n_sent = 1 + rng.below(4)
    kinds = [rng.below(9) for _ in range(n_sent)]
    person = None
    answer_kind = rng.below(4)  # 0 topic answer, 1 entity answer, 2 unanswerable, 3 topic answer
    topic_placed = False
    for k in kinds:
        if b.n:
            b.text(" ")
        if k == 0:
            person = pick(rng, PERSONS)
            b.ent(person, "PERSON")
            b.text(" moved to ")
            b.ent(pick(rng, GPES), "GPE")
            b.text(" in ")
            b.ent(pick(rng, DATES), "DATE")
            b.text(".")
        elif k == 1:
            b.text("The ")
            b.ent(pick(rng, ORGS), "ORG")
            b.text(" report was reviewed by ")
            person = pick(rng, PERSONS)
            b.ent(person, "PERSON")
            b.text(".")
        elif k == 2:
            first = pick(rng, PERSONS).split()[0].lower()
            first = unicodedata.normalize("NFKD", first).encode("ascii", "ignore").decode()
            b.text("Contact ")
            b.ent(f"{first}.desk{rng.below(90) + 10}@mail.example", "EMAIL")
            b.text(" before ")
            b.ent(f"{1 + rng.below(12)}:{rng.below(60):02d} {'AM' if rng.below(2) else 'PM'}", "TIME")
            b.text(".")
        elif k == 3:
            b.text("Her SSN is ")
            b.ent(f"{100 + rng.below(800)}-{10 + rng.below(89)}-{1000 + rng.below(9000)}", "SSN")
            b.text(" and card ")
            body = "4" + "".join(str(rng.below(10)) for _ in range(14))
            digits = luhn_complete(body)
            sep = " " if rng.below(2) else "-"
            b.ent(sep.join(digits[j : j + 4] for j in range(0, 16, 4)), "CREDIT_CARD")
            b.text(" was declined.")
        elif k == 4:
            b.text("They hiked near ")
            b.ent(pick(rng, LOCS), "LOC")
            b.text(" carrying ")
            b.ent(pick(rng, QUANTS), "QUANTITY")
            b.text(".")
        elif k == 5:
            person = pick(rng, PERSONS)
            b.ent(person, "PERSON")
            b.text(" wrote ")
            b.ent(pick(rng, WORKS), "WORK_OF_ART")
            b.text(" while studying ")
            b.text(topic)
            topic_placed = True
            b.text(".")
        elif k == 6:
            b.text("Prices rose ")
            b.ent(f"{1 + rng.below(40)}%", "PERCENT")
            b.text(" last year.")
        else:
            b.text("The committee discussed ")
            b.text(topic)
            topic_placed = True
            b.text(" at length.")
    context = b.value()
    if not topic_placed and answer_kind in (0, 3):
        b.text(" Everyone enjoyed ")
        b.text(topic)
        b.text(".")
        context = b.value()
    ctx_truth, ctx_ann = b.truth, b.annotations

    # deliberate overlaps and duplicates in the external annotations
    for span in list(ctx_truth):
        if span["label"] == "PERSON" and rng.below(3) == 0:
            surname_at = context.index(" ", span["start"]) + 1
            ctx_ann.append({"start": surname_at, "end": span["end"], "label": "ORG"})
        if span["label"] == "SSN" and rng.below(2) == 0:
            ctx_ann.append(dict(span))

    q = Builder()
    if answer_kind == 1 and ctx_truth:
        target = ctx_truth[rng.below(len(ctx_truth))]
        q.text("Which entity is mentioned in sentence form?")
        answers = [{"text": context[target["start"] : target["end"]], "answer_start": target["start"]}]
    elif answer_kind == 2:
        q.text("What did ")
        q.ent(pick(rng, PERSONS), "PERSON")
        q.text(" eat for breakfast?")
    else:
        if person is not None:
            q.text("What topic is associated with ")
            q.ent(person, "PERSON")
            q.text("?")
        else:
            q.text("What topic came up?")
        at = context.rindex(topic)
        answers = [{"text": topic, "answer_start": at}]

    rid = f"q{i:03d}"
    rec = {"id": rid, "context": context, "question": q.value(), "answers": answers, "is_answerable": bool(answers)}
    ann = [
        {"doc_id": f"{rid}#context", "spans": sorted(ctx_ann, key=lambda s: (s["start"], s["end"]))},
        {"doc_id": f"{rid}#question", "spans": q.annotations},
    ]
    truth = {"id": rid, "context": ctx_truth, "question": q.truth}
    if answers and rng.below(3):
        pred = answers[0]["text"]
    elif not answers and rng.below(2):
        pred = ""
    else:
        pred = pick(rng, TOPICS)
    return rec, ann, truth, {"id": rid, "prediction": pred}


def dump(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rows:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20240501)
    ap.add_argument("--outdir", default=str(Path(__file__).resolve().parents[1] / "src" / "redactkit" / "data"))
    args = ap.parse_args()

    rng = SplitMix64(args.seed)
    recs, anns, truths, preds = [], [], [], []
    for i in range(args.n):
        rec, ann, truth, pred = make_record(i, rng)
        recs.append(rec)
        anns.extend(ann)
        truths.append(truth)
        preds.append(pred)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    dump(out / "mini_qa.jsonl", recs)
    dump(out / "mini_qa.annotations.jsonl", anns)
    dump(out / "mini_qa.truth.jsonl", truths)
    dump(out / "mini_qa.predictions.jsonl", preds)
    print(f"wrote {len(recs)} records to {out}")


if __name__ == "__main__":
    main()
