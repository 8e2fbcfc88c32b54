//! The engine must stay deterministic: no clock reads and no ambient
//! entropy anywhere in the library sources.

use std::fs;
use std::path::Path;

fn sources(dir: &Path, out: &mut Vec<(String, String)>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            sources(&path, out);
        } else if path.extension().is_some_and(|e| e == "rs") {
            out.push((
                path.display().to_string(),
                fs::read_to_string(&path).unwrap(),
            ));
        }
    }
}

/// `word` not followed by an identifier character (`Instant` but not
/// `InstantiateError`).
fn mentions(text: &str, word: &str) -> bool {
    text.match_indices(word).any(|(i, _)| {
        let next = text[i + word.len()..].chars().next();
        word.ends_with(':') || !next.is_some_and(|c| c.is_alphanumeric() || c == '_')
    })
}

#[test]
fn library_reads_no_clock_or_os_entropy() {
    let mut files = Vec::new();
    sources(
        &Path::new(env!("CARGO_MANIFEST_DIR")).join("src"),
        &mut files,
    );
    assert!(files.len() > 10);
    let banned = [
        "SystemTime",
        "Instant",
        "thread_rng",
        "OsRng",
        "from_entropy",
        "getrandom",
        "std::",
    ];
    for (path, text) in &files {
        for word in banned {
            assert!(!mentions(text, word), "{path} mentions {word}");
        }
    }
}
