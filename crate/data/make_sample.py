"""Trains the sample model and writes the sample mock fixture.

Run from the repository root after `cargo build`:

    python3 data/make_sample.py
"""

import hashlib
import json
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent
BIN = ROOT.parent / "target" / "debug" / "recover"

# canned model answers, keyed by processed unit text
RESPONSES = {
    "Q: How do patients book appointments with the clinic right now?\n"
    "A: They call the front desk during office hours.":
        "1. The system must let patients book appointments without calling the front desk.\n"
        "2. The system must be available outside office hours.",
    "They call the front desk during office hours.": "None",
    "The system must let patients book appointments online at any time.": [
        {"error": "connection reset by peer"},
        "Here are the requirements:\n"
        "1. The system must let patients book appointments online.\n"
        "2. The system must accept bookings at any time of day.",
    ],
    "Q: Should the app send reminders by email or by text message?\n"
    "A: Text messages please, one day before the visit.":
        "1. The system must send appointment reminders by text message.\n"
        "2. The system must send reminders one day before the visit.",
    "Text messages please, one day before the visit.":
        "1) The system must send reminders one day before the visit.",
    "Doctors need to see their daily schedule on a tablet.":
        "1. The system must show doctors their daily schedule on a tablet.",
    "The receptionist should export the weekly schedule as a spreadsheet.":
        "1. The system must let the receptionist export the weekly schedule as a spreadsheet.",
    "Q: Should the system send reminders by text message to patients?\n"
    "A: Yes, that sounds good to me, honestly.":
        "1. The system must send reminders to patients by text message.",
    "The software must store medical records securely for every patient.":
        "1. The system must store medical records securely.",
}


def run(*args):
    return subprocess.run([str(BIN), *args], check=True, capture_output=True, text=True).stdout


def main():
    if not BIN.exists():
        sys.exit(f"{BIN} not found; run `cargo build` first")
    sample = ROOT / "sample"
    print(run("train", "--data", str(ROOT / "train" / "separable.csv"),
              "--out", str(sample / "model.json"),
              "--featurizer", "tfidf", "--kernel", "linear", "--c", "1"))

    units = []
    for name in ["clinic_interview.jsonl", "two_req.jsonl"]:
        preds = run("classify", "--model", str(sample / "model.json"),
                    "--transcript", str(sample / name))
        tmp = sample / ".predictions.jsonl"
        tmp.write_text(preds)
        out = run("process", "--transcript", str(sample / name), "--predictions", str(tmp))
        tmp.unlink()
        units += [json.loads(line) for line in out.splitlines() if line.strip()]

    responses = {}
    for unit in units:
        text = unit["text"]
        if text not in RESPONSES:
            sys.exit(f"no canned response for unit {unit['source_indices']}: {text!r}")
        responses[hashlib.sha256(text.encode()).hexdigest()] = RESPONSES[text]

    fixture = {
        "hash": "sha256",
        "note": "keys are the lowercase hex SHA-256 of the UTF-8 excerpt (processed unit text)",
        "responses": dict(sorted(responses.items())),
    }
    (sample / "mock.json").write_text(json.dumps(fixture, indent=2) + "\n")
    print(f"mock fixture: {len(responses)} responses")


if __name__ == "__main__":
    main()
