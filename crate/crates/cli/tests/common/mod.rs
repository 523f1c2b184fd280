#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn recover<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_recover"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `run` on a transcript with the bundled sample config and a mock fixture.
pub fn run_sample(transcript: &Path, mock: &Path, out_dir: &Path, extra: &[&str]) -> Output {
    let mut args: Vec<std::ffi::OsString> = vec![
        "run".into(),
        "--transcript".into(),
        transcript.into(),
        "--config".into(),
        data("sample/config.json").into(),
        "--mock".into(),
        mock.into(),
        "--out-dir".into(),
        out_dir.into(),
    ];
    args.extend(extra.iter().map(Into::into));
    recover(args)
}

/// Mock fixture answering every excerpt with `default`.
pub fn default_mock(dir: &Path, default: &str) -> PathBuf {
    let path = dir.join("mock.json");
    let doc = serde_json::json!({"hash": "sha256", "responses": {}, "default": default});
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

pub fn read_jsonl(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}
