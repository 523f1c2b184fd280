"""Regenerates the synthetic fixtures under data/.

The sample model and mock fixture need the `recover` binary; see
make_sample.py.
"""

import csv
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent

REQ_SUBJECTS = [
    "The system", "The application", "The portal", "The app", "The platform",
    "The software", "The booking tool",
]
REQ_MODALS = ["must", "should", "needs to", "has to", "shall"]
REQ_ACTIONS = [
    "let patients book appointments online",
    "send reminders by text message",
    "send reminders by email",
    "export the weekly schedule as a spreadsheet",
    "show doctors their daily schedule on a tablet",
    "allow patients to cancel appointments online",
    "store medical records securely",
    "notify the receptionist about cancellations",
    "support online payments by card",
    "generate monthly reports for the clinic",
    "keep a history of every appointment",
    "let doctors block holidays in the calendar",
    "encrypt patient data at rest",
    "allow the receptionist to reschedule appointments",
    "display available slots for each doctor",
    "integrate with the hospital billing software",
    "require a password for every account",
    "support multiple clinic locations",
    "print invoices for insurance companies",
    "log every change to a patient record",
    "let nurses update the waiting list",
    "send a confirmation email after booking",
    "show the receptionist a weekly overview",
    "allow patients to upload documents",
    "work on phones and tablets",
]
REQ_FRAMES = [
    "{s} {m} {a}.",
    "We need a system that can {a}.",
    "Patients want the app to {a}.",
    "It is important that the software can {a}.",
    "I would like the platform to {a}.",
    "Our doctors expect the system to {a}.",
]

SMALL_TALK_OPENERS = [
    "Thanks for joining us", "Good morning everyone", "Nice to meet you",
    "Sorry for being late", "Great to see you again", "Hello and welcome",
    "Okay, got it", "Perfect, thank you so much", "That sounds good to me",
    "Let me grab a coffee first", "Could you repeat that please",
    "I have been working here for ten years", "My colleague will join us later",
    "Let us take a short break", "See you next week", "Happy to help",
]
SMALL_TALK_TAILS = [
    "", " today", " this morning", " by the way", " as always", " honestly",
    " for your time", " right now", " if that is fine", " before lunch",
]


def sentences():
    rng = random.Random(7)
    req = set()
    while len(req) < 150:
        frame = rng.choice(REQ_FRAMES)
        req.add(frame.format(s=rng.choice(REQ_SUBJECTS), m=rng.choice(REQ_MODALS),
                             a=rng.choice(REQ_ACTIONS)))
    non = set()
    while len(non) < 150:
        non.add(rng.choice(SMALL_TALK_OPENERS) + rng.choice(SMALL_TALK_TAILS) + ".")
    return sorted(req), sorted(non)


def write_csv(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["text", "label"])
        w.writerows(rows)


def training_sets():
    req, non = sentences()
    rows = [(t, "Req") for t in req] + [(t, "NonReq") for t in non]
    random.Random(11).shuffle(rows)
    write_csv(ROOT / "train" / "separable.csv", rows)

    # same texts, labels dealt independently of content: 150 Req, 150 NonReq
    texts = [t for t, _ in rows]
    labels = ["Req"] * 150 + ["NonReq"] * 150
    random.Random(13).shuffle(labels)
    write_csv(ROOT / "train" / "shuffled.csv", list(zip(texts, labels)))


def confusion_fixture():
    # tp=39, fp=23, tn=59, fn=12 over 133 turns
    pairs = ([("Req", "Req")] * 39 + [("Req", "NonReq")] * 23
             + [("NonReq", "NonReq")] * 59 + [("NonReq", "Req")] * 12)
    random.Random(3).shuffle(pairs)
    d = ROOT / "classify"
    d.mkdir(parents=True, exist_ok=True)
    with (d / "predictions.jsonl").open("w") as p, (d / "oracle.tsv").open("w") as o:
        o.write("index\tlabel\n")
        for i, (pred, actual) in enumerate(pairs):
            p.write(json.dumps({"index": i, "label": pred}) + "\n")
            o.write(f"{i}\t{actual}\n")


def write_jsonl(path, turns):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        for speaker, text in turns:
            f.write(json.dumps({"speaker": speaker, "text": text}) + "\n")


SAMPLE = [
    ("Interviewer", "Good morning, thanks for joining us today."),
    ("Clinic manager", "Happy to help, thanks for having me here."),
    ("Interviewer", "How do patients book appointments with the clinic right now?"),
    ("Clinic manager", "They call the front desk during office hours."),
    ("Interviewer", "Okay, got it."),
    ("Clinic manager", "The system must let patients book appointments online at any time."),
    ("Interviewer", "Should the app send reminders by email or by text message?"),
    ("Clinic manager", "Text messages please, one day before the visit."),
    ("Clinic manager", "Doctors need to see their daily schedule on a tablet."),
    ("Interviewer", "Great, anything else?"),
    ("Clinic manager", "The receptionist should export the weekly schedule as a spreadsheet."),
    ("Interviewer", "Perfect, thank you so much for your time today."),
]

# exactly two requirement-bearing turns, the first a question
TWO_REQ = [
    ("Interviewer", "Good morning, thanks for joining us today."),
    ("Interviewer", "Should the system send reminders by text message to patients?"),
    ("Clinic manager", "Yes, that sounds good to me, honestly."),
    ("Clinic manager", "Perfect, thank you so much for your time today."),
    ("Clinic manager", "The software must store medical records securely for every patient."),
    ("Interviewer", "See you next week."),
]

ALL_SMALL_TALK = [
    ("Interviewer", "Good morning, thanks for joining us today."),
    ("Clinic manager", "Happy to help, nice to meet you."),
    ("Interviewer", "Let us take a short break before lunch."),
    ("Clinic manager", "See you next week."),
]

STEP2 = [
    ("A", "We need a way to book rooms online."),
    ("B", "Rooms should be bookable from phones too."),
    ("A", "The system must log every booking."),
    ("A", "Can the system send a reminder email?"),
    ("B", "Yes, one hour before the meeting starts."),
    ("A", "What happens when two people book the same room?"),
    ("B", "The second person should see a conflict warning."),
    ("B", "Okay thanks."),
    ("A", "Reports should be exported every month as spreadsheets."),
    ("A", "Do you also need reports for each individual floor?"),
]
STEP2_RELEVANT = [0, 1, 2, 3, 5, 6, 8, 9]
STEP2_EXPECTED = [
    ([0], False), ([1], False), ([3, 4], True), ([5, 6], True), ([6], False),
    ([8], False), ([9], False),
]


def step2_fixture():
    d = ROOT / "step2"
    write_jsonl(d / "conversation.jsonl", STEP2)
    (d / "relevant.txt").write_text(",".join(map(str, STEP2_RELEVANT)) + "\n")
    with (d / "expected_units.jsonl").open("w") as f:
        for idx, merged in STEP2_EXPECTED:
            if merged:
                q, a = (STEP2[i][1] for i in idx)
                text = f"Q: {q}\nA: {a}"
            else:
                text = STEP2[idx[0]][1]
            f.write(json.dumps({"source_indices": idx, "text": text, "merged": merged}) + "\n")


def eval_fixtures():
    d = ROOT / "turns"
    d.mkdir(parents=True, exist_ok=True)
    generated = {
        2: "The system must let patients book appointments online.",
        5: "The system must let patients book appointments online at any time.",
        6: "The system must send reminders by text message one day before the visit.",
        8: "The system must show doctors their daily schedule on a tablet.",
        10: "The system must export the weekly schedule as a spreadsheet.",
    }
    references = {
        2: ["The system must provide online appointment booking."],
        5: ["Patients must be able to book appointments online at any time.",
            "The system shall offer round-the-clock online booking."],
        6: ["The system must send a text message reminder one day before each appointment.",
            "Patients must receive reminders by text.",
            "The system should remind patients of visits by SMS."],
        8: ["Doctors must see their daily schedule on a tablet.",
            "The system must display the daily schedule to doctors.",
            "The schedule must be viewable on tablets.",
            "Doctors need a tablet view of their appointments."],
        10: ["The receptionist must be able to export the weekly schedule as a spreadsheet.",
             "The system shall export schedules to spreadsheets.",
             "Weekly schedules must be exportable.",
             "The system must support spreadsheet export of the weekly plan."],
    }
    with (d / "generated.tsv").open("w") as f:
        f.write("turn_index\ttext\n")
        for k, v in generated.items():
            f.write(f"{k}\t{v}\n")
    with (d / "references.tsv").open("w") as f:
        f.write("turn_index\ttext\n")
        for k, refs in references.items():
            for r in refs:
                f.write(f"{k}\t{r}\n")

    c = ROOT / "corpus"
    c.mkdir(parents=True, exist_ok=True)
    oracle = [refs[0] for refs in references.values()]
    (c / "oracle.txt").write_text("\n".join(oracle) + "\n")


def main():
    training_sets()
    confusion_fixture()
    write_jsonl(ROOT / "sample" / "clinic_interview.jsonl", SAMPLE)
    write_jsonl(ROOT / "sample" / "two_req.jsonl", TWO_REQ)
    write_jsonl(ROOT / "sample" / "small_talk.jsonl", ALL_SMALL_TALK)
    step2_fixture()
    eval_fixtures()


if __name__ == "__main__":
    main()
