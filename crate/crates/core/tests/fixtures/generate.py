"""Regenerates the synthetic fixtures in this directory.

Run from this directory: python3 generate.py
Everything is deterministic; rerunning rewrites identical files.
"""
import hashlib
import json
import math
import os
import random
import re

HERE = os.path.dirname(os.path.abspath(__file__))

MINI = {
    "train": ("E001",
              "[doctor] hi , how are you today ?\n[patient] i have had a cough for two days .\n"
              "[doctor] any fever ?\n[patient] no .\n",
              "CHIEF COMPLAINT\nCough.\n\nHISTORY OF PRESENT ILLNESS\nCough for two days, no fever.\n\n"
              "ASSESSMENT AND PLAN\nViral infection. Rest and fluids.\n"),
    "valid": ("E002",
              "[doctor] what brings you in ?\n[patient] my knee hurts when i run .\n",
              "SUBJECTIVE\nKnee pain with running.\n\nPHYSICAL EXAMINATION\nMild swelling of the left knee.\n\n"
              "PLAN\nIce and rest.\n"),
    "test1": ("E003",
              "[doctor] good morning .\n[patient] morning doctor .\n[doctor] how is the rash ?\n"
              "[patient] it is itchy .\n[guest] she scratches it at night .\n[doctor] okay .\n",
              "HISTORY OF PRESENT ILLNESS\nItchy rash, worse at night.\n\n"
              "ASSESSMENT\nContact dermatitis.\n\nPLAN\nTopical steroid.\n"),
    "test2": ("E004",
              "[doctor] your labs are back .\n[patient] are they okay ?\n[doctor] your a1c is 7.2 .\n",
              "CHIEF COMPLAINT\nLab review.\n\nRESULTS\nHemoglobin A1c 7.2.\n\n"
              "ASSESSMENT AND PLAN\nType 2 diabetes, start metformin.\n"),
    "test3": ("E005",
              "[doctor] tell me about the headache .\n[patient] it started yesterday after work and has not stopped .\n"
              "[doctor] any vision changes ?\n[patient] a little blurry .\n[doctor] let us check your blood pressure .\n",
              "SUBJECTIVE\nHeadache since yesterday with blurry vision.\n\nVITALS\nBP 150/95.\n\n"
              "ASSESSMENT AND PLAN\nHypertensive headache. Recheck in one week.\n"),
}

KEEP = re.compile(r"[^a-z0-9.,?!'\-:;()\[\]/\s]")


def normalize(text):
    return " ".join(KEEP.sub("", text.lower()).split())


def mini_corpus():
    root = os.path.join(HERE, "mini_corpus")
    stats = {}
    for split, (eid, dialogue, note) in MINI.items():
        os.makedirs(os.path.join(root, split), exist_ok=True)
        with open(os.path.join(root, split, eid + ".dialogue.txt"), "w") as f:
            f.write(dialogue)
        with open(os.path.join(root, split, eid + ".note.txt"), "w") as f:
            f.write(note)
        norm = normalize(dialogue)
        tags = re.findall(r"\[[^\[\]\s]+\]", norm)
        words = [w for w in norm.split() if not re.fullmatch(r"\[[^\[\]\s]+\]", w)]
        stats[split] = (len(tags), len(words), len(normalize(note).split()))
    return stats


def score_inputs():
    refs, cands = [], []
    for split, (eid, _, note) in MINI.items():
        refs.append({"id": eid, "text": note})
        lines = note.strip().split("\n")
        # a crude "system": keep every other line of the reference
        cands.append({"id": eid, "text": "\n".join(lines[::2])})
    for name, rows in (("references.jsonl", refs), ("candidates.jsonl", cands)):
        with open(os.path.join(HERE, "scoring", name), "w") as f:
            for r in rows:
                f.write(json.dumps(r) + "\n")
    return refs, cands


def hashed_vector(token, dim):
    digest = hashlib.sha256(token.encode()).digest()
    return [round((b - 127.5) / 127.5, 6) or 0.5 for b in digest[:dim]]


def embeddings(refs, cands, dim=8):
    lines = [json.dumps({"encoder": "fixture-sha256-v1", "dim": dim})]
    for ref, cand in zip(refs, cands):
        for side, row in (("candidate", cand), ("reference", ref)):
            toks = normalize(row["text"]).split()
            lines.append(json.dumps({"id": row["id"], "side": side, "tokens": toks,
                                     "vectors": [hashed_vector(t, dim) for t in toks]}))
    with open(os.path.join(HERE, "scoring", "embeddings.jsonl"), "w") as f:
        f.write("\n".join(lines) + "\n")
    bad = list(lines)
    rec = json.loads(bad[3])
    rec["vectors"][0] = rec["vectors"][0][:-1]
    bad[3] = json.dumps(rec)
    with open(os.path.join(HERE, "scoring", "embeddings_bad_dim.jsonl"), "w") as f:
        f.write("\n".join(bad) + "\n")


def gaussian():
    rng = random.Random(20240501)
    with open(os.path.join(HERE, "gauss.txt"), "w") as f:
        for _ in range(4096):
            f.write(repr(rng.gauss(0.0, 1.0)) + "\n")


if __name__ == "__main__":
    os.makedirs(os.path.join(HERE, "scoring"), exist_ok=True)
    for split, (turns, dtoks, ntoks) in mini_corpus().items():
        print(f"{split}: turns={turns} dialogue_tokens={dtoks} note_tokens={ntoks}")
    refs, cands = score_inputs()
    embeddings(refs, cands)
    gaussian()
