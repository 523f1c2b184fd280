mod common;

use common::{data, default_mock, read_jsonl, recover, run_sample, stderr, stdout};
use tempfile::tempdir;

#[test]
fn missing_input_is_exit_2_and_names_the_path() {
    let o = recover([
        "eval",
        "classify",
        "--predictions",
        "no/such/predictions.jsonl",
        "--oracle",
        data("classify/oracle.tsv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no/such/predictions.jsonl"), "{}", stderr(&o));
}

#[test]
fn malformed_transcript_is_exit_2() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(&path, "{\"speaker\": \"A\"}\n").unwrap();
    let mock = default_mock(dir.path(), "None");
    let o = run_sample(&path, &mock, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("bad.jsonl"));
}

#[test]
fn train_echoes_hyperparameters_in_model() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("model.json");
    let o = recover([
        "train",
        "--data",
        data("train/separable.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--featurizer",
        "tfidf",
        "--kernel",
        "rbf",
        "--c",
        "1",
        "--gamma",
        "100",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let text = model.to_string();
    assert!(text.contains("\"kernel\":\"rbf\""), "{text}");
    assert_eq!(model["config"]["c"], 1.0);
    assert_eq!(model["config"]["gamma"], 100.0);
}

#[test]
fn embedding_featurizer_requires_vectors() {
    let dir = tempdir().unwrap();
    let o = recover([
        "train",
        "--data",
        data("train/separable.csv").to_str().unwrap(),
        "--out",
        dir.path().join("m.json").to_str().unwrap(),
        "--featurizer",
        "embedding",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--vectors"));
}

fn stage<'a>(trace: &'a [serde_json::Value], name: &str) -> Vec<&'a serde_json::Value> {
    trace.iter().filter(|v| v["stage"] == name).collect()
}

#[test]
fn question_and_answer_become_one_merged_unit() {
    let dir = tempdir().unwrap();
    let mock = default_mock(dir.path(), "1. The system must send text message reminders;");
    let o = run_sample(&data("sample/two_req.jsonl"), &mock, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = read_jsonl(&dir.path().join("trace.jsonl"));
    let units = stage(&trace, "process");
    let merged: Vec<_> = units.iter().filter(|u| u["merged"] == true).collect();
    assert_eq!(merged.len(), 1);
    assert_eq!(merged[0]["source_indices"], serde_json::json!([1, 2]));
    assert_eq!(units.len(), 2);
}

#[test]
fn small_talk_gives_an_empty_set() {
    let dir = tempdir().unwrap();
    let mock = default_mock(dir.path(), "1. Unexpected;");
    let o = run_sample(&data("sample/small_talk.jsonl"), &mock, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let set: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("requirements.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(set["requirements"], serde_json::json!([]));
    assert_eq!(set["conversation_id"], "small_talk");
}

#[test]
fn backend_failure_is_exit_3_and_keeps_the_trace() {
    let dir = tempdir().unwrap();
    let mock = dir.path().join("mock.json");
    std::fs::write(&mock, r#"{"hash":"sha256","responses":{}}"#).unwrap();
    let o = run_sample(&data("sample/clinic_interview.jsonl"), &mock, dir.path(), &["--retries", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let trace = read_jsonl(&dir.path().join("trace.jsonl"));
    assert!(!stage(&trace, "classify").is_empty());
    assert!(stage(&trace, "generate").iter().all(|g| g["error"].is_string()));
    assert!(!dir.path().join("requirements.json").exists());
}

#[test]
fn unparseable_response_is_exit_3() {
    let dir = tempdir().unwrap();
    let mock = default_mock(dir.path(), "Sorry, I cannot do that.");
    let o = run_sample(&data("sample/two_req.jsonl"), &mock, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    let trace = read_jsonl(&dir.path().join("trace.jsonl"));
    assert!(stage(&trace, "generate").iter().all(|g| g["attempts"] == 3));
}

#[test]
fn turn_without_references_is_named() {
    let dir = tempdir().unwrap();
    let generated = dir.path().join("generated.tsv");
    let references = dir.path().join("references.tsv");
    std::fs::write(&generated, "turn_index\ttext\n1\tThe system must work.\n7\tOrphan.\n").unwrap();
    std::fs::write(&references, "turn_index\ttext\n1\tThe system shall work.\n").unwrap();
    let o = recover([
        "eval",
        "turns",
        "--generated",
        generated.to_str().unwrap(),
        "--references",
        references.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("turn 7"), "{}", stderr(&o));
}

#[test]
fn turn_table_has_group_and_average_rows() {
    let o = recover([
        "eval",
        "turns",
        "--generated",
        data("turns/generated.tsv").to_str().unwrap(),
        "--references",
        data("turns/references.tsv").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for row in ["1 answer ", "2 answers", "3 answers", "4 answers", "Average"] {
        assert!(out.contains(row), "{out}");
    }
}

#[test]
fn job_count_does_not_change_output() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    let transcript = data("sample/clinic_interview.jsonl");
    let mock = data("sample/mock.json");
    assert!(run_sample(&transcript, &mock, a.path(), &["--jobs", "1"]).status.success());
    assert!(run_sample(&transcript, &mock, b.path(), &["--jobs", "4"]).status.success());
    for file in ["requirements.json", "requirements.txt", "trace.jsonl"] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn staged_commands_match_run() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let transcript = data("sample/clinic_interview.jsonl");
    let model = data("sample/model.json");
    let mock = data("sample/mock.json");
    let config = data("sample/config.json");
    let p = |s: &str| d.join(s).to_str().unwrap().to_string();

    let o = recover(["classify", "--transcript", transcript.to_str().unwrap(), "--model", model.to_str().unwrap(), "--out", &p("pred.jsonl")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = recover(["process", "--transcript", transcript.to_str().unwrap(), "--predictions", &p("pred.jsonl"), "--out", &p("units.jsonl")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = recover([
        "generate", "--units", &p("units.jsonl"), "--config", config.to_str().unwrap(),
        "--mock", mock.to_str().unwrap(), "--conversation-id", "clinic_interview", "--out", &p("staged.json"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(run_sample(&transcript, &mock, d, &[]).status.success());
    assert_eq!(
        std::fs::read_to_string(d.join("staged.json")).unwrap(),
        std::fs::read_to_string(d.join("requirements.json")).unwrap()
    );
}

#[test]
fn metrics_on_identical_segments() {
    let dir = tempdir().unwrap();
    let seg = dir.path().join("seg.txt");
    std::fs::write(&seg, "the system must export data\nreports are produced every week\n").unwrap();
    let s = seg.to_str().unwrap();
    let o = recover(["metrics", "--candidate", s, "--reference", s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("BLEU       100.00"), "{out}");
    assert!(out.contains("METEOR"), "{out}");
}
