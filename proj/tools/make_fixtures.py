#!/usr/bin/env python3
"""Writes the canned LLM responses under assets/fixtures/.

Layout: <out>/<stage>/<key>.txt, one numbered list per file. The content is
hand-written vocabulary combined by a small grammar with a fixed seed, so the
output is reproducible. Re-run after editing:

    python3 tools/make_fixtures.py assets/fixtures
"""

import itertools
import random
import sys
from pathlib import Path

ATTRS = {
    "gender": ["male", "female"],
    "pitch": ["low", "normal", "high"],
    "speed": ["slow", "normal", "fast"],
    "volume": ["quiet", "normal", "loud"],
}

# Stage 1 answers. Keywords never repeat across attributes so that a word
# identifies its attribute as well as its class.
KEYWORDS = {
    ("gender", "male"): ["man.", "boy.", "guy.", "dude.", "gentleman."],
    ("gender", "female"): ["woman", "girl", "lady", "gal", "madam"],
    ("pitch", "low"): ["low", "deep", "bass", "rumbling", "baritone"],
    ("pitch", "normal"): ["medium", "moderate", "average", "mid-range", "middle"],
    ("pitch", "high"): ["high", "shrill", "squeaky", "soprano", "piercing"],
    ("speed", "slow"): ["slow", "sluggish", "leisurely", "unhurried", "languid"],
    ("speed", "normal"): ["steady", "regular", "measured", "ordinary", "typical"],
    ("speed", "fast"): ["Fast", "rapid", "quick", "brisk", "hasty"],
    ("volume", "quiet"): ["quiet", "soft", "hushed", "faint", "whispery"],
    # "soft" also shows up here; the bank drops it from both classes
    ("volume", "normal"): ["conversational", "comfortable", "balanced", "soft", "even"],
    ("volume", "loud"): ["loud", "booming", "thunderous", "blaring", "noisy"],
}

STAGE2 = {
    "gender": [
        "Please generate a voice that sounds like a [placeholder].",
        "I want a voice like a [placeholder].",
        "Create the voice of a [placeholder].",
        "The speaker should be a [placeholder].",
        "Let a [placeholder] read this.",
    ],
    "pitch": [
        "I need a [placeholder] voice.",
        "Looking for a [placeholder] voice.",
        "In search of a [placeholder] voice.",
        "Seeking a voice with [placeholder] pitch.",
        "Require a voice, [placeholder] pitch.",
    ],
    "speed": [
        "Speak at a [placeholder] pace.",
        "I'd like a [placeholder] speaking rate.",
        "Talk at a [placeholder] speed.",
        "A [placeholder] voice at a [placeholder] speed.",
        "Use a [placeholder] tempo.",
        "Keep the delivery [placeholder].",
    ],
    "volume": [
        "Make the voice [placeholder].",
        "I need [placeholder] volume.",
        "Adjust the volume, please.",
        "Use a [placeholder] speaking level.",
        "Keep the loudness [placeholder].",
        "The speech should sound [placeholder].",
    ],
}

# Combined gender+pitch phrases, as an LLM answered the example query.
GENDER_PITCH_PHRASES = [
    "Generate a voice that sounds like a [Gender] with [Pitch] pitch.",
    "Looking for a voice that embodies a [Gender] with a [Pitch] pitch.",
    "Require a voice with a [Pitch] pitch that represents a [Gender].",
    "Requesting a [Gender] voice at [Pitch] pitch.",
    "Desiring a [Gender] voice with a [Pitch] pitch.",
]

MODIFIERS = {
    "pitch": ["with {P} pitch", "with a {P} pitch", "at a {P} pitch", "in a {P} register", "having a {P} tone"],
    "speed": ["speaking at a {S} pace", "with a {S} speaking rate", "at a {S} speed", "talking at a {S} tempo",
              "with {S} delivery"],
    "volume": ["at a {V} volume", "with {V} loudness", "at a {V} level", "in a {V} manner", "sounding {V}"],
}

PHRASE_BITS = {
    "gender": ["{G} voice", "{G} speaker", "a {G}"],
    "pitch": ["{P} pitch", "{P} tone", "{P} register"],
    "speed": ["{S} pace", "{S} tempo", "{S} speed"],
    "volume": ["{V} volume", "{V} loudness", "{V} level"],
}

SENTENCE_WITH_GENDER = [
    "Generate a voice that sounds like a {G} {mods}.",
    "I want to hear a {G} speaking {mods}.",
    "Please create the voice of a {G} {mods}.",
    "Looking for a voice that embodies a {G} {mods}.",
    "Could you synthesize a {G} {mods}?",
    "Let a {G} read this {mods}.",
    "Produce speech from a {G} {mods}.",
]

SENTENCE_NO_GENDER = [
    "Generate a voice {mods}.",
    "I need a voice {mods}.",
    "Please speak {mods}.",
    "Create speech {mods}.",
    "Give me a voice {mods}.",
    "Read this {mods}.",
    "Could you talk {mods}?",
]

SLOT = {"gender": "G", "pitch": "P", "speed": "S", "volume": "V"}


def join_and(parts):
    if len(parts) == 1:
        return parts[0]
    return ", ".join(parts[:-1]) + " and " + parts[-1]


def numbered(lines):
    return "".join(f"{i + 1}. {line}\n" for i, line in enumerate(lines))


def sentence(rng, subset, fill):
    mods = [rng.choice(MODIFIERS[a]) for a in subset if a != "gender"]
    frames = SENTENCE_WITH_GENDER if "gender" in subset else SENTENCE_NO_GENDER
    text = rng.choice(frames).replace("{mods}", join_and(mods) if mods else "")
    text = text.replace(" .", ".").replace(" ?", "?")
    return text.format(**fill)


def phrase(rng, subset, fill):
    bits = [rng.choice(PHRASE_BITS[a]) for a in subset]
    rng.shuffle(bits)
    style = rng.randrange(3) if len(bits) > 1 else 0
    if style == 0:
        text = ", ".join(bits)
    elif style == 1:
        text = bits[0] + " with " + join_and(bits[1:])
    else:
        text = join_and(bits)
    text = text.format(**fill)
    return text[0].upper() + text[1:]


def combined(rng, subset, kind, fill, n=5):
    make = sentence if kind == "sentence" else phrase
    out = []
    while len(out) < n:
        s = make(rng, subset, fill)
        if s not in out:
            out.append(s)
    return out


def placeholder_fill():
    return {k: "[" + a.capitalize() + "]" for a, k in SLOT.items()}


# Words an LLM reaches for when asked to describe one class directly. Narrower
# than the stage 1 lists, since nothing asks it to vary the word.
DIRECT_WORDS = {
    ("gender", "male"): ["man", "male"],
    ("gender", "female"): ["woman", "female"],
    ("pitch", "low"): ["low", "deep"],
    ("pitch", "normal"): ["medium", "normal"],
    ("pitch", "high"): ["high", "shrill"],
    ("speed", "slow"): ["slow", "unhurried"],
    ("speed", "normal"): ["normal", "regular"],
    ("speed", "fast"): ["fast", "quick"],
    ("volume", "quiet"): ["quiet", "soft"],
    ("volume", "normal"): ["normal", "moderate"],
    ("volume", "loud"): ["loud", "booming"],
}


def direct_fill(rng, classes):
    fill = {}
    for a, k in SLOT.items():
        fill[k] = rng.choice(DIRECT_WORDS[(a, classes[a])]) if a in classes else "?"
    return fill


def main(out):
    out = Path(out)
    rng = random.Random(20231006)

    def write(stage, key, lines, raw=None):
        d = out / stage
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{key}.txt").write_text(raw if raw is not None else numbered(lines))

    for (a, c), words in KEYWORDS.items():
        write("stage1", f"{a}_{c}", words)
    for a, lines in STAGE2.items():
        write("stage2", a, lines)

    names = list(ATTRS)
    subsets = [list(s) for r in range(2, len(names) + 1) for s in itertools.combinations(names, r)]
    for subset in subsets:
        key = "+".join(subset)
        for kind in ("sentence", "phrase"):
            if subset == ["gender", "pitch"] and kind == "phrase":
                lines = list(GENDER_PITCH_PHRASES)
            else:
                lines = combined(rng, subset, kind, placeholder_fill())
            # LLMs occasionally lose a bracket while merging; the pipeline must drop these.
            if rng.random() < 0.3:
                victim = "[" + rng.choice(subset).capitalize() + "]"
                broken = lines[rng.randrange(len(lines))].replace(victim, "similar")
                lines.insert(rng.randrange(len(lines) + 1), broken)
            write("stage3", f"{key}_{kind}", lines, "Sure! Here are some options:\n\n" + numbered(lines))

    # Ablation without placeholders: class-specific sentences written directly.
    for a, classes in ATTRS.items():
        for c in classes:
            lines = []
            while len(lines) < 5:
                s = sentence(rng, [a], direct_fill(rng, {a: c})) if rng.random() < 0.6 else phrase(rng, [a], direct_fill(rng, {a: c}))
                if s not in lines:
                    lines.append(s)
            write("direct_stage2", f"{a}_{c}", lines)

    for subset in subsets:
        for combo in itertools.product(*(ATTRS[a] for a in subset)):
            classes = dict(zip(subset, combo))
            key = "+".join(f"{a}={c}" for a, c in classes.items())
            for kind in ("sentence", "phrase"):
                lines = []
                while len(lines) < 5:
                    said = list(subset)
                    shown = dict(classes)
                    roll = rng.random()
                    if roll < 0.12:
                        # one attribute silently dropped during combination
                        said.remove(rng.choice(said))
                    elif roll < 0.2:
                        # one attribute drifts to a neighbouring class
                        a = rng.choice(said)
                        shown[a] = rng.choice([c for c in ATTRS[a] if c != classes[a]])
                    make = sentence if kind == "sentence" else phrase
                    s = make(rng, said, direct_fill(rng, shown))
                    if s not in lines:
                        lines.append(s)
                write("direct_stage3", f"{key}_{kind}", lines)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else str(Path(__file__).resolve().parent.parent / "assets" / "fixtures"))
