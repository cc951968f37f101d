use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{DebugLoc, FuncRef, IrError, IrFunction, IrModule, IrStatement, StmtRef};
use crate::FileId;

/// Modules grouped by symbol dependencies, with a merged function table.
/// Linking is symbolic: no code is rewritten.
#[derive(Debug, Clone)]
pub struct LinkedModule {
    pub members: Vec<IrModule>,
    /// Exported (non-internal) function definitions by name.
    pub functions: BTreeMap<String, FuncRef>,
}

/// Where a call goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Callee<'a> {
    Defined(FuncRef),
    External(&'a str),
    /// Indirect call through a pointer.
    Unknown,
}

impl LinkedModule {
    /// Links modules that are known to belong together; fails on duplicate
    /// exported definitions.
    pub fn link(members: Vec<IrModule>) -> Result<Self, IrError> {
        let mut functions = BTreeMap::new();
        let mut owners: HashMap<String, usize> = HashMap::new();
        for (mi, m) in members.iter().enumerate() {
            for sym in m.exported_symbols() {
                if let Some(&prev) = owners.get(sym) {
                    return Err(IrError::DuplicateDefinition {
                        symbol: sym.to_string(),
                        first: members[prev].file.clone(),
                        second: m.file.clone(),
                    });
                }
                owners.insert(sym.to_string(), mi);
            }
            for (fi, f) in m.functions.iter().enumerate() {
                if f.is_definition && !f.internal {
                    functions.insert(f.name.clone(), FuncRef::new(mi, fi));
                }
            }
        }
        Ok(LinkedModule { members, functions })
    }

    pub fn function(&self, f: FuncRef) -> &IrFunction {
        &self.members[f.module as usize].functions[f.function as usize]
    }

    pub fn statement(&self, s: StmtRef) -> &IrStatement {
        &self.function(s.func()).statements[s.index as usize]
    }

    pub fn module_of(&self, f: FuncRef) -> &IrModule {
        &self.members[f.module as usize]
    }

    /// Resolves a callee name as seen from module `from`: a module-local
    /// (internal) definition wins, then the exported table.
    pub fn resolve<'a>(&self, from: u32, name: &'a str) -> Callee<'a> {
        if let Some(fi) = self.members[from as usize].defined_function(name) {
            return Callee::Defined(FuncRef::new(from as usize, fi));
        }
        match self.functions.get(name) {
            Some(&f) => Callee::Defined(f),
            None => Callee::External(name),
        }
    }

    pub fn callee_of(&self, s: StmtRef) -> Option<Callee<'_>> {
        let stmt = self.statement(s);
        match &stmt.kind {
            super::InstKind::Call { callee: Some(name), .. } => Some(self.resolve(s.module, name)),
            super::InstKind::Call { callee: None, .. } => Some(Callee::Unknown),
            _ => None,
        }
    }

    /// All defined functions, in module then definition order.
    pub fn defined_functions(&self) -> impl Iterator<Item = FuncRef> + '_ {
        self.members.iter().enumerate().flat_map(|(mi, m)| {
            m.functions.iter().enumerate().filter(|(_, f)| f.is_definition).map(move |(fi, _)| FuncRef::new(mi, fi))
        })
    }

    /// Every statement in the group, in order.
    pub fn statements(&self) -> impl Iterator<Item = (StmtRef, &IrStatement)> + '_ {
        self.defined_functions().flat_map(move |f| {
            self.function(f).statements.iter().enumerate().map(move |(i, s)| (f.stmt(i), s))
        })
    }

    /// Statements whose debug line is `line` in `file`.
    pub fn map_source_line(&self, file: &FileId, line: u32) -> BTreeSet<StmtRef> {
        self.statements()
            .filter(|(_, s)| s.debug.as_ref().is_some_and(|d: &DebugLoc| d.line == line && d.file.matches(file)))
            .map(|(r, _)| r)
            .collect()
    }

    /// Whether any member module was compiled from `file`.
    pub fn covers_file(&self, file: &FileId) -> bool {
        self.statements().any(|(_, s)| s.debug.as_ref().is_some_and(|d| d.file.matches(file)))
            || self.members.iter().any(|m| m.source_filename.as_deref().is_some_and(|n| FileId::new(n).matches(file)))
    }
}

/// Groups modules by the transitive closure of "references a symbol
/// exported by", then links each group. Groups come out ordered by their
/// first member's position in the input.
pub fn group_and_link(modules: Vec<IrModule>) -> Result<Vec<LinkedModule>, IrError> {
    let n = modules.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut exporters: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, m) in modules.iter().enumerate() {
        for sym in m.exported_symbols() {
            exporters.entry(sym).or_default().push(i);
        }
    }
    for (i, m) in modules.iter().enumerate() {
        for sym in m.referenced_symbols() {
            // references to a module's own definitions do not link anything
            if m.defined_function(sym).is_some() || m.global(sym).is_some_and(|g| !g.external) {
                continue;
            }
            for &j in exporters.get(sym).map(Vec::as_slice).unwrap_or(&[]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut slots: Vec<Option<IrModule>> = modules.into_iter().map(Some).collect();
    groups
        .into_values()
        .map(|members| LinkedModule::link(members.into_iter().map(|i| slots[i].take().unwrap()).collect()))
        .collect()
}

/// The program a file belongs to: its top-level directory below the corpus
/// root, or its stem for files directly under the root.
pub fn program_of(relative_path: &str) -> String {
    match relative_path.split_once('/') {
        Some((dir, _)) => dir.to_string(),
        None => relative_path.rsplit_once('.').map(|(s, _)| s).unwrap_or(relative_path).to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_ll;
    use super::*;

    fn module(name: &str, defines: &[&str], calls: &[&str]) -> IrModule {
        let mut text = String::new();
        for d in defines {
            text.push_str(&format!("define void @{d}() {{\n"));
            for c in calls {
                text.push_str(&format!("  call void @{c}()\n"));
            }
            text.push_str("  ret void\n}\n");
        }
        for c in calls {
            if !defines.contains(c) {
                text.push_str(&format!("declare void @{c}()\n"));
            }
        }
        parse_ll(&text, name).unwrap()
    }

    #[test]
    fn caller_and_callee_form_one_group() {
        let groups = group_and_link(vec![module("main.ll", &["main"], &["helper"]), module("util.ll", &["helper"], &[])]).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].members.len(), 2);
        let main = groups[0].functions["main"];
        let call = main.stmt(0);
        assert_eq!(groups[0].callee_of(call), Some(Callee::Defined(groups[0].functions["helper"])));
    }

    #[test]
    fn independent_modules_stay_apart() {
        let groups = group_and_link(vec![module("a.ll", &["a"], &["puts"]), module("b.ll", &["b"], &["puts"])]).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].callee_of(groups[0].functions["a"].stmt(0)), Some(Callee::External("puts")));
    }

    #[test]
    fn duplicate_definitions_fail_to_link() {
        let r = group_and_link(vec![module("a.ll", &["main", "x"], &["h"]), module("b.ll", &["h", "x"], &[])]);
        assert!(matches!(r, Err(IrError::DuplicateDefinition { .. })));
    }

    #[test]
    fn internal_functions_resolve_within_their_module() {
        let a = parse_ll("define internal void @h() {\n  ret void\n}\ndefine void @main() {\n  call void @h()\n  call void @g()\n  ret void\n}\ndeclare void @g()\n", "a.ll").unwrap();
        let b = parse_ll("define internal void @h() {\n  ret void\n}\ndefine void @g() {\n  call void @h()\n  ret void\n}\n", "b.ll").unwrap();
        let groups = group_and_link(vec![a, b]).unwrap();
        assert_eq!(groups.len(), 1);
        let g = &groups[0];
        assert_eq!(g.resolve(0, "h"), Callee::Defined(FuncRef::new(0, 0)));
        assert_eq!(g.resolve(1, "h"), Callee::Defined(FuncRef::new(1, 0)));
    }

    #[test]
    fn program_ids() {
        assert_eq!(program_of("CWE121_01/main.c"), "CWE121_01");
        assert_eq!(program_of("single.ll"), "single");
    }
}
