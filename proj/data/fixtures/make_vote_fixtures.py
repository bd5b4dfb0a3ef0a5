#!/usr/bin/env python3
"""Regenerates the vote-tally fixtures in this directory (seeded, stable)."""
import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
TARGETS = ["pa-nutrition", "pa-filling", "pa-taste", "pa-easy", "pa-health", "pa-variety"]
GENERIC = ["SUG", "NPC", "NIC", "PPC", "PIC"]
N_VOTERS = 10


def header(note):
    return {"kind": "header", "schema_version": 1, "metadata": {"note": note}}


def popular():
    return [{"kind": "popular_argument", "id": t, "cluster_name": t[3:].title(),
             "text": "popular argument " + t[3:]} for t in TARGETS]


def counter(cid, ctype, rank, target=None, source="vegetarian"):
    rec = {"kind": "counter_argument", "id": cid, "text": "candidate " + cid,
           "arg_type": ctype, "source_group": source, "votes_me": 0, "votes_veg": 0,
           "rank": rank}
    if target:
        rec["target_cluster"] = target
    return rec


def spread(rng, total, ids, n_sheets):
    """Splits `total` selections over ids and sheets, each cell <= N_VOTERS."""
    cells = {(s, i): 0 for s in range(n_sheets) for i in ids}
    keys = list(cells)
    assert total <= len(keys) * N_VOTERS
    left = total
    while left:
        k = rng.choice(keys)
        if cells[k] < N_VOTERS:
            cells[k] += 1
            left -= 1
    sheets = []
    for s in range(n_sheets):
        sheets.append({i: cells[(s, i)] for i in ids if cells[(s, i)]})
    return sheets


def write_jsonl(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")


def type_totals_fixture(rng):
    # meat eater / vegetarian selections per type; DIR is per target and
    # averages 150 / 194 over the six targets (20 candidates each)
    me = {"NIC": 97, "PIC": 91, "SUG": 91, "NPC": 90, "PPC": 76}
    veg = {"NIC": 136, "PIC": 133, "NPC": 115, "PPC": 112, "SUG": 106}
    dir_me = [140, 160, 150, 145, 155, 150]
    dir_veg = [194, 190, 198, 194, 200, 188]

    records = [header("vote tally fixture, per-type totals")] + popular()
    groups = []
    for t, target in enumerate(TARGETS):
        ids = [f"dir-{target[3:]}-{r}" for r in range(1, 21)]
        records += [counter(c, "DIR", r + 1, target) for r, c in enumerate(ids)]
        groups.append((ids, dir_me[t], dir_veg[t]))
    for ctype in GENERIC:
        ids = [f"{ctype.lower()}-{r}" for r in range(1, 11)]
        records += [counter(c, ctype, r + 1) for r, c in enumerate(ids)]
        groups.append((ids, me[ctype], veg[ctype]))
    write_jsonl(HERE / "type_totals_candidates.jsonl", records)

    sheets = []
    for ids, n_me, n_veg in groups:
        for group, n in (("meat_eater", n_me), ("vegetarian", n_veg)):
            for sel in spread(rng, n, ids, 3):
                sheets.append({"voter_group": group, "n_voters": N_VOTERS, "selections": sel})
    rng.shuffle(sheets)
    write_jsonl(HERE / "type_totals_votes.jsonl", sheets)


def source_group_fixture(rng):
    # selections of meat-eater-authored vs vegetarian-authored counters
    records = [header("vote tally fixture, per-author-group totals")]
    by_source = {"meat_eater": [], "vegetarian": []}
    for ctype in GENERIC[1:]:
        for r in range(1, 5):
            source = "meat_eater" if r % 2 else "vegetarian"
            cid = f"{ctype.lower()}-{r}"
            records.append(counter(cid, ctype, r, source=source))
            by_source[source].append(cid)
    write_jsonl(HERE / "source_group_candidates.jsonl", records)

    totals = {("meat_eater", "meat_eater"): 79, ("meat_eater", "vegetarian"): 102,
              ("vegetarian", "meat_eater"): 72, ("vegetarian", "vegetarian"): 92}
    sheets = []
    for (source, voters), n in totals.items():
        for sel in spread(rng, n, by_source[source], 2):
            sheets.append({"voter_group": voters, "n_voters": N_VOTERS, "selections": sel})
    rng.shuffle(sheets)
    write_jsonl(HERE / "source_group_votes.jsonl", sheets)


if __name__ == "__main__":
    rng = random.Random(20190301)
    type_totals_fixture(rng)
    source_group_fixture(rng)
