"""Regenerates toy_corpus.csv: 240 short financial-news style sentences whose
sentiment words come from two disjoint vocabularies. Neutral words are shared
by both classes. Deterministic (fixed seed)."""

import csv
import random

SUBJECTS = ["Nordic Steel", "Helsinki Foods", "Baltic Paper", "Oulu Telecom", "Tampere Mills",
            "Kemi Energy", "Lapland Mining", "Espoo Software", "Vaasa Logistics", "Turku Shipyards"]
PERIODS = ["first quarter", "second quarter", "third quarter", "fourth quarter", "half year", "fiscal year"]
NEUTRAL = ["quarter", "market", "sales", "analysts", "shares", "company", "period", "group", "unit", "report"]

POSITIVE = {
    "nouns": ["profit", "growth", "gains", "surge", "record", "upgrade", "dividend", "bonus", "rally", "success"],
    "adjs": ["strong", "robust", "excellent", "healthy", "solid", "impressive", "bright", "stellar"],
    "verbs": ["beat", "boost", "expand", "win", "raise", "improve", "double", "exceed"],
}
NEGATIVE = {
    "nouns": ["loss", "decline", "slump", "layoff", "deficit", "downgrade", "lawsuit", "warning", "shortfall", "crisis"],
    "adjs": ["weak", "poor", "dismal", "disappointing", "bleak", "sluggish", "fragile", "gloomy"],
    "verbs": ["miss", "cut", "shrink", "lose", "halt", "suspend", "abandon", "slash"],
}

TEMPLATES = [
    "{subj} reported {adj} {noun} for the {period} .",
    "{subj} expects to {verb} {neutral} after {adj} {noun} .",
    "Analysts see {adj} {noun} at {subj} this {period} .",
    "{subj} will {verb} its {neutral} targets amid {noun} .",
    "The {neutral} saw {adj} {noun} as {subj} moved to {verb} output .",
    "{subj} shares reflect {adj} {noun} and {noun2} in the {period} .",
]


def sentence(rng, vocab):
    template = rng.choice(TEMPLATES)
    nouns = rng.sample(vocab["nouns"], 2)
    return template.format(
        subj=rng.choice(SUBJECTS),
        adj=rng.choice(vocab["adjs"]),
        noun=nouns[0],
        noun2=nouns[1],
        verb=rng.choice(vocab["verbs"]),
        neutral=rng.choice(NEUTRAL),
        period=rng.choice(PERIODS),
    )


def main():
    rng = random.Random(20240521)
    rows = [("positive", sentence(rng, POSITIVE)) for _ in range(120)]
    rows += [("negative", sentence(rng, NEGATIVE)) for _ in range(120)]
    rng.shuffle(rows)
    with open("toy_corpus.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["label", "text"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
