"""JSON-lines helpers shared by trajectory dumps, metrics logs and curve files."""
from __future__ import annotations

import json
from pathlib import Path


def append_jsonl(path, records):
    path = Path(path)
    with open(path, "a") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        fh.flush()


def read_jsonl(path):
    """Read JSON lines; a truncated or unparsable final line is dropped."""
    text = Path(path).read_text()
    lines = text.split("\n")
    out = []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            # only the last line may be partial (crash mid-write)
            if i >= len(lines) - 2 and not text.endswith(line + "\n"):
                break
            raise
    return out


def trajectory_record(episode, step, agent, features, available, action_name):
    return {
        "episode": int(episode),
        "step": int(step),
        "agent": int(agent),
        "features": {k: float(v) for k, v in features.items()},
        "available": [bool(a) for a in available],
        "action": action_name,
    }


def load_trajectory_dataset(path):
    """(feature map, action name) pairs from a trajectory dump."""
    records = read_jsonl(path)
    return [(rec["features"], rec["action"]) for rec in records]
