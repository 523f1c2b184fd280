use std::fmt;
use std::path::Path;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Input = 2,
    Backend = 3,
    Internal = 4,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn fail(kind: ExitKind, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        kind,
        error: error.into(),
    }
}

pub fn input_error(message: impl fmt::Display) -> Failure {
    fail(ExitKind::Input, anyhow::anyhow!("{message}"))
}

pub trait OrExit<T> {
    fn or_input(self, context: impl fmt::Display) -> CmdResult<T>;
    fn or_backend(self, context: impl fmt::Display) -> CmdResult<T>;
    fn or_internal(self, context: impl fmt::Display) -> CmdResult<T>;
}

impl<T, E> OrExit<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn or_input(self, context: impl fmt::Display) -> CmdResult<T> {
        self.map_err(|e| fail(ExitKind::Input, e.into().context(context.to_string())))
    }

    fn or_backend(self, context: impl fmt::Display) -> CmdResult<T> {
        self.map_err(|e| fail(ExitKind::Backend, e.into().context(context.to_string())))
    }

    fn or_internal(self, context: impl fmt::Display) -> CmdResult<T> {
        self.map_err(|e| fail(ExitKind::Internal, e.into().context(context.to_string())))
    }
}

pub fn read_text(path: &Path) -> CmdResult<String> {
    std::fs::read_to_string(path).or_input(format!("reading {}", path.display()))
}

/// Writes are input errors: the destination is user-supplied.
pub fn write_text(path: &Path, contents: &str) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).or_input(format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).or_input(format!("writing {}", path.display()))
}

/// Write to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, contents: &str) -> CmdResult {
    match path {
        Some(p) => write_text(p, contents),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .or_input("writing to stdout")
        }
    }
}
