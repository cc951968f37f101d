use std::fmt;
use std::sync::Arc;

/// Identifies a source file by the path it was read from.
///
/// Cheap to clone; every token and IR statement carries one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FileId(Arc<str>);

impl FileId {
    pub fn new(path: impl AsRef<str>) -> Self {
        FileId(Arc::from(path.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Two paths name the same file when they are equal or one is a suffix of
    /// the other at a `/` boundary (`src/a.c` matches `a.c`).
    pub fn matches(&self, other: &FileId) -> bool {
        let (a, b) = (self.as_str(), other.as_str());
        if a == b {
            return true;
        }
        let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
        let short = short.trim_start_matches("./");
        long.ends_with(short) && long[..long.len() - short.len()].ends_with('/')
    }
}

impl fmt::Debug for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FileId {
    fn from(s: &str) -> Self {
        FileId::new(s)
    }
}
