#!/usr/bin/env python3
"""Regenerates data/acts_corpus.jsonl, the synthetic dialogue-act corpus.

Each class is expanded from question templates for the scale-factor
scenario, deduplicated, and sampled down with a fixed seed.
"""

import itertools
import json
import random
import sys

PER_CLASS = 60
SEED = 7

Q = ["volume", "length", "width", "height", "scale factor"]
SIDE = ["left", "right"]
FIG = ["box", "figure", "object"]
N = ["2", "3", "4", "5", "6", "8", "10", "12", "125", "1000", "three", "five"]


def expand(template, **slots):
    keys = list(slots)
    for combo in itertools.product(*(slots[k] for k in keys)):
        yield template.format(**dict(zip(keys, combo)))


PROBING = [
    ("How did you get {x}?", dict(x=["that answer", "the volume", "the scale factor", "that number", "10", "1000"])),
    ("How did you {v} the {q}?", dict(v=["calculate", "find", "figure out", "work out"], q=Q)),
    ("Why did you {v}?", dict(v=["multiply by 2", "divide the lengths", "cube the scale factor", "add the sides",
                                 "multiply the sides", "use the left box"])),
    ("Explain to me how you {v} the {q}.", dict(v=["got", "found", "calculated"], q=Q)),
    ("Can you explain how you {v} the {q}?", dict(v=["found", "got"], q=Q)),
    ("What does the scale factor {v}?", dict(v=["represent", "mean here", "tell you", "represent in the diagram"])),
    ("What does {x} represent in terms of the diagram?", dict(x=["n", "k", "the 2", "this number"])),
    ("Why is the {q} {s}?", dict(q=Q, s=["bigger", "staying the same", "eight times larger", "changing"])),
    ("How could you {v} that the {q} is right?", dict(v=["check", "show", "prove"], q=Q)),
    ("What makes you think the {q} is {n}?", dict(q=Q, n=["10", "1000", "2", "250"])),
    ("How do you know the {q} {v}?", dict(q=Q, v=["changed", "doubled", "is correct"])),
    ("Why does the volume grow faster than the {q}?", dict(q=["length", "width", "height"])),
    ("How would you find the {q} of the {s} box?", dict(q=Q, s=SIDE)),
    ("What is staying the same when we {v} the box?", dict(v=["scale", "stretch", "enlarge"])),
    ("Do you know how to {v} the {q}?", dict(v=["calculate", "find", "get"], q=Q)),
    ("How is the {q} of the right box related to the left box?", dict(q=Q)),
    ("Why do you think that works?", {}),
    ("How could you convince me that your answer makes sense?", {}),
]

FACTUAL = [
    ("What is the {q}?", dict(q=Q)),
    ("What is the {q} of the {s} {f}?", dict(q=Q, s=SIDE, f=FIG)),
    ("What is the {s} {f} {q}?", dict(q=Q, s=SIDE, f=FIG)),
    ("What is {a} times {b}?", dict(a=["2", "3", "5"], b=["4", "5", "10"])),
    ("What is {a}x{b}?", dict(a=["2", "3", "5"], b=["4", "5", "10"])),
    ("What is the {q} now?", dict(q=Q)),
    ("Is the {q} {n}?", dict(q=Q, n=["10", "1000", "2", "125"])),
    ("What do you {v} first?", dict(v=["subtract", "multiply", "add", "divide"])),
    ("What is next?", {}),
    ("What would you do next?", {}),
    ("Does this picture show {x}?", dict(x=["½ or ¼", "a half", "two boxes"])),
    ("What is the {q} if the scale factor is {k}?", dict(q=["volume", "length", "width", "height"], k=["2", "3", "1"])),
    ("Tell me the {q} of the {s} box.", dict(q=Q, s=SIDE)),
    ("Which box has the bigger {q}?", dict(q=Q)),
    ("What number do you multiply the {q} by?", dict(q=["length", "width", "height"])),
    ("What is the new {q}?", dict(q=Q)),
]

EXPOSITORY = [
    ("The answer is {n}, right?", dict(n=N)),
    ("The {q} is {n}, right?", dict(q=Q, n=["10", "1000", "2", "125"])),
    ("Look at {x}.", dict(x=["this diagram", "the left box", "the right box", "the scale factor", "the picture",
                              "the widget"])),
    ("Between the {x}?", dict(x=["2", "two boxes", "two figures"])),
    ("And then you multiply by {k}.", dict(k=["2", "3", "the scale factor"])),
    ("Then I {v}.", dict(v=["cube the scale factor", "multiply the sides", "divide by the left length"])),
    ("This is the {s} {f}.", dict(s=SIDE, f=FIG)),
    ("Notice that the {q} {v}.", dict(q=Q, v=["doubled", "changed", "got bigger"])),
    ("Remember that volume is length times width times height.", {}),
    ("So the {q} is {n}, right?", dict(q=Q, n=["10", "1000", "2"])),
    ("See how each side gets {k} times longer.", dict(k=["2", "3", "two"])),
    ("The volume is the product of the three sides.", {}),
    ("So we multiply each side by the scale factor.", {}),
    ("You multiply the {q} by {k}, right?", dict(q=["length", "width", "height"], k=["2", "3"])),
    ("This is where the scale factor comes in.", {}),
    ("Remember that the scale factor multiplies every side.", {}),
]

OTHER = [
    ("{x}", dict(x=["Sit down", "Close your books", "Please be quiet", "Raise your hand", "Line up at the door",
                     "Stop talking please", "Take out a piece of paper", "Everyone eyes on me",
                     "Clean up your desk", "Put your phones away", "Put your pencils down",
                     "Settle down everyone", "Please take your seats", "Wait your turn", "Quiet down please",
                     "Pack up your things", "Push in your chairs", "Hands to yourself", "Listen carefully",
                     "Sit with your partner", "Turn to your neighbor", "Get out your calculators",
                     "Eyes up here please", "Walk, do not run", "Homework is due Friday", "Let us take a short break",
                     "Who is absent today?", "Pass your papers forward", "Grab a worksheet"])),
    ("Open your notebooks to page {n}.", dict(n=["5", "12", "20"])),
    ("{g}", dict(g=["Hi", "Hello", "Hey there", "Good morning", "Good afternoon", "Hi, how are you?",
                     "Hello, how are you doing?", "Hey, how is it going?", "Good morning, how are you today?",
                     "Hi there, how are you?", "Hello class", "Good morning everyone", "Bye, see you tomorrow",
                     "Have a nice day", "See you later"])),
    ("{a}", dict(a=["Great job!", "Good work.", "Nice!", "Well done!", "Thank you.", "Thanks!", "Okay.",
                     "Very good!", "Oh nice!", "Awesome work!", "Good thinking.", "Excellent!", "Perfect."])),
    # Off-topic talk.
    ("What is your favorite color?", {}),
    ("Do you like pizza?", {}),
    ("Did you watch the game last night?", {}),
    ("Where do you live?", {}),
    ("Do you have any pets?", {}),
    ("What did you do this weekend?", {}),
    ("Are you hungry?", {}),
    ("Who is your best friend?", {}),
]


def build(templates):
    out = []
    for template, slots in templates:
        out.extend(expand(template, **slots) if slots else [template])
    return sorted(set(out))


def main(path):
    rng = random.Random(SEED)
    rows = []
    for label, templates in [("Probing", PROBING), ("Factual", FACTUAL), ("Expository", EXPOSITORY),
                             ("Other", OTHER)]:
        pool = build(templates)
        # Take one from every template first so each phrasing is represented.
        picked = []
        for template, slots in templates:
            options = sorted(set(expand(template, **slots))) if slots else [template]
            picked.append(rng.choice(options))
        rest = [p for p in pool if p not in set(picked)]
        rng.shuffle(rest)
        picked = sorted(set(picked))
        picked += rest[: max(0, PER_CLASS - len(picked))]
        for i, text in enumerate(picked):
            rows.append({"id": f"{label[0].lower()}{i:03d}", "text": text, "gold_label": label})
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/acts_corpus.jsonl")
