//! Module index: which `.ll` files exist under an IR root and how they
//! group into linked modules.
//!
//! ```text
//! # irloc module index v1
//! root<TAB><ir root directory>
//! <group><TAB><program><TAB><sha256 of file><TAB><path relative to root>
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{group_and_link, parse_ll, program_of, IrError, LinkedModule};

const HEADER: &str = "# irloc module index v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub group: usize,
    pub program: String,
    pub sha256: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleIndex {
    pub root: PathBuf,
    pub entries: Vec<IndexEntry>,
}

/// A linked group together with the program it belongs to.
#[derive(Debug, Clone)]
pub struct ProgramGroup {
    pub program: String,
    pub linked: LinkedModule,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> IrError + '_ {
    move |source| IrError::Io { path: path.to_path_buf(), source }
}

fn ll_files(root: &Path) -> Result<Vec<(PathBuf, String)>, IrError> {
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| IrError::Io { path: root.to_path_buf(), source: std::io::Error::other(e.to_string()) })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "ll") {
            let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            files.push((entry.path().to_path_buf(), rel));
        }
    }
    files.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(files)
}

impl ModuleIndex {
    /// Parses every `.ll` file below `root` (in parallel), groups modules
    /// within each program and returns the index plus the linked groups.
    pub fn build(root: &Path) -> Result<(ModuleIndex, Vec<ProgramGroup>), IrError> {
        let files = ll_files(root)?;
        let parsed: Vec<_> = files
            .par_iter()
            .map(|(path, rel)| {
                let text = std::fs::read_to_string(path).map_err(io(path))?;
                let hash = hex::encode(Sha256::digest(text.as_bytes()));
                Ok((rel.clone(), hash, parse_ll(&text, rel.as_str())?))
            })
            .collect::<Result<_, IrError>>()?;
        let mut by_program: BTreeMap<String, Vec<(String, String, super::IrModule)>> = BTreeMap::new();
        for (rel, hash, module) in parsed {
            by_program.entry(program_of(&rel)).or_default().push((rel, hash, module));
        }
        let mut entries = Vec::new();
        let mut groups = Vec::new();
        for (program, members) in by_program {
            let hashes: BTreeMap<String, String> = members.iter().map(|(r, h, _)| (r.clone(), h.clone())).collect();
            for linked in group_and_link(members.into_iter().map(|(_, _, m)| m).collect())? {
                for m in &linked.members {
                    let path = m.file.as_str().to_string();
                    entries.push(IndexEntry { group: groups.len(), program: program.clone(), sha256: hashes[&path].clone(), path });
                }
                groups.push(ProgramGroup { program: program.clone(), linked });
            }
        }
        Ok((ModuleIndex { root: root.to_path_buf(), entries }, groups))
    }

    /// Re-parses the indexed files and rebuilds the groups recorded in the
    /// index. A file whose hash changed is an error.
    pub fn load_groups(&self) -> Result<Vec<ProgramGroup>, IrError> {
        let parsed: Vec<_> = self
            .entries
            .par_iter()
            .map(|e| {
                let path = self.root.join(&e.path);
                let text = std::fs::read_to_string(&path).map_err(io(&path))?;
                if hex::encode(Sha256::digest(text.as_bytes())) != e.sha256 {
                    return Err(IrError::Index { line: 0, message: format!("{} changed since it was indexed; rerun ingest-ir", e.path) });
                }
                parse_ll(&text, e.path.as_str())
            })
            .collect::<Result<_, IrError>>()?;
        let mut grouped: BTreeMap<usize, (String, Vec<super::IrModule>)> = BTreeMap::new();
        for (e, m) in self.entries.iter().zip(parsed) {
            grouped.entry(e.group).or_insert_with(|| (e.program.clone(), Vec::new())).1.push(m);
        }
        grouped
            .into_values()
            .map(|(program, members)| Ok(ProgramGroup { program, linked: LinkedModule::link(members)? }))
            .collect()
    }
}

pub fn write_index(index: &ModuleIndex) -> String {
    let mut out = format!("{HEADER}\nroot\t{}\n", index.root.display());
    for e in &index.entries {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", e.group, e.program, e.sha256, e.path));
    }
    out
}

pub fn read_index(text: &str) -> Result<ModuleIndex, IrError> {
    let bad = |line: usize, message: &str| IrError::Index { line, message: message.to_string() };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(bad(1, "missing index header")),
    }
    let root = match lines.next() {
        Some((_, l)) => l.strip_prefix("root\t").ok_or_else(|| bad(2, "missing root line"))?,
        None => return Err(bad(2, "missing root line")),
    };
    let mut entries = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(4, '\t').collect();
        let [group, program, sha256, path] = f.as_slice() else { return Err(bad(i + 1, "expected 4 fields")) };
        let group = group.parse().map_err(|_| bad(i + 1, "bad group number"))?;
        entries.push(IndexEntry { group, program: program.to_string(), sha256: sha256.to_string(), path: path.to_string() });
    }
    Ok(ModuleIndex { root: PathBuf::from(root), entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip_and_grouping() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        std::fs::create_dir_all(p.join("prog1")).unwrap();
        std::fs::create_dir_all(p.join("prog2")).unwrap();
        std::fs::write(p.join("prog1/main.ll"), "define void @main() {\n  call void @h()\n  ret void\n}\ndeclare void @h()\n").unwrap();
        std::fs::write(p.join("prog1/util.ll"), "define void @h() {\n  ret void\n}\n").unwrap();
        std::fs::write(p.join("prog2/main.ll"), "define void @main() {\n  call void @h()\n  ret void\n}\ndeclare void @h()\n").unwrap();
        let (index, groups) = ModuleIndex::build(p).unwrap();
        assert_eq!(groups.len(), 2, "programs are linked separately even with the same symbols");
        assert_eq!(groups[0].linked.members.len(), 2);
        let text = write_index(&index);
        let back = read_index(&text).unwrap();
        assert_eq!(back, index);
        let reloaded = back.load_groups().unwrap();
        assert_eq!(reloaded.len(), 2);
        std::fs::write(p.join("prog2/main.ll"), "define void @main() {\n  ret void\n}\n").unwrap();
        assert!(back.load_groups().is_err());
    }
}
