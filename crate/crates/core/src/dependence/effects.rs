//! Memory effects of calls to functions outside the linked module.

/// Which pointer arguments a call reads and writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    /// Writes the listed argument positions, reads every other pointer.
    Writes(&'static [usize]),
    /// Writes every argument from the given position on (scanf family).
    WritesFrom(usize),
    /// Reads its pointer arguments only.
    ReadsOnly,
    /// No memory effect worth tracking (debug/lifetime intrinsics).
    None,
    /// Unknown external: reads and writes every pointer argument.
    Unknown,
}

impl Effect {
    pub fn writes(self, position: usize) -> bool {
        match self {
            Effect::Writes(list) => list.contains(&position),
            Effect::WritesFrom(k) => position >= k,
            Effect::Unknown => true,
            Effect::ReadsOnly | Effect::None => false,
        }
    }

    pub fn reads(self, position: usize) -> bool {
        match self {
            Effect::None => false,
            Effect::Unknown | Effect::ReadsOnly => true,
            Effect::Writes(_) | Effect::WritesFrom(_) => !self.writes(position),
        }
    }
}

const WRITE_FIRST: &[&str] = &[
    "memset", "memcpy", "memmove", "strcpy", "strncpy", "strcat", "strncat", "sprintf", "snprintf", "vsprintf",
    "vsnprintf", "wcscpy", "wcsncpy", "wcscat", "wcsncat", "fgets", "gets", "wmemset", "wmemcpy", "wmemmove",
    "swprintf", "fread", "free", "realloc", "bzero", "fgetws", "strtok",
];
const WRITE_SECOND: &[&str] = &["read", "recv", "recvfrom", "fscanf_s"];
const READS_ONLY: &[&str] = &[
    "printf", "fprintf", "wprintf", "fwprintf", "puts", "fputs", "fputc", "putchar", "strlen", "wcslen", "strcmp",
    "strncmp", "wcscmp", "memcmp", "memchr", "strchr", "strrchr", "wcschr", "strstr", "strdup", "strndup", "atoi",
    "atol", "atoll", "atof", "strtol", "strtoul", "strtod", "fwrite", "write", "send", "sendto", "system", "popen",
    "getenv", "fopen", "fclose", "open", "close", "malloc", "calloc", "exit", "abort", "rand", "srand", "time",
    "printLine", "printIntLine", "printLongLine", "printWLine", "printHexCharLine", "printSizeTLine",
];

/// Normalizes intrinsic and fortified names: `llvm.memcpy.p0i8.p0i8.i64`
/// becomes `memcpy`, `__memcpy_chk` becomes `memcpy`.
pub fn base_name(callee: &str) -> &str {
    if let Some(rest) = callee.strip_prefix("llvm.") {
        return rest.split('.').next().unwrap_or(rest);
    }
    if let Some(rest) = callee.strip_prefix("__").and_then(|r| r.strip_suffix("_chk")) {
        return rest;
    }
    callee
}

pub fn external_effect(callee: &str) -> Effect {
    if callee.starts_with("llvm.") {
        let base = base_name(callee);
        return match base {
            "memset" | "memcpy" | "memmove" => Effect::Writes(&[0]),
            _ => Effect::None,
        };
    }
    let name = base_name(callee);
    if WRITE_FIRST.contains(&name) {
        Effect::Writes(&[0])
    } else if WRITE_SECOND.contains(&name) {
        Effect::Writes(&[1])
    } else if matches!(name, "scanf" | "wscanf") {
        Effect::WritesFrom(1)
    } else if matches!(name, "sscanf" | "fscanf" | "swscanf" | "fwscanf") {
        Effect::WritesFrom(2)
    } else if READS_ONLY.contains(&name) {
        Effect::ReadsOnly
    } else {
        Effect::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intrinsics_map_to_libc_names() {
        assert_eq!(base_name("llvm.memmove.p0i8.p0i8.i64"), "memmove");
        assert_eq!(base_name("__strcpy_chk"), "strcpy");
        assert_eq!(external_effect("llvm.memset.p0i8.i64"), Effect::Writes(&[0]));
        assert_eq!(external_effect("llvm.lifetime.start.p0i8"), Effect::None);
    }

    #[test]
    fn effect_positions() {
        let e = external_effect("memcpy");
        assert!(e.writes(0) && !e.writes(1) && e.reads(1) && !e.reads(0));
        assert!(external_effect("printf").reads(1));
        assert!(external_effect("sscanf").writes(3));
        assert!(external_effect("mystery").writes(0) && external_effect("mystery").reads(0));
    }
}
