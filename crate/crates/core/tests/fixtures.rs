use std::path::PathBuf;

use darboux::fixtures::catalog;
use darboux::io::ProblemFile;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Shipped fixtures equal the generators; `DARBOUX_BLESS=1` rewrites them.
#[test]
fn shipped_fixtures_match_generators() {
    let bless = std::env::var_os("DARBOUX_BLESS").is_some();
    for (stem, p) in catalog() {
        let path = dir().join(format!("{stem}.json"));
        let text = p.to_json();
        if bless {
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let shipped = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(shipped, text, "{stem}.json is stale; rerun with DARBOUX_BLESS=1");
        assert_eq!(ProblemFile::from_json(&shipped).unwrap(), p);
    }
}
