//! Regenerates test-data/oracle/*.json from the brute-force oracle.

use std::path::PathBuf;

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../test-data/oracle")
    });
    std::fs::create_dir_all(&out).expect("create output directory");
    for (q, m) in ffsieve_oracle::GRID {
        let fx = ffsieve_oracle::fixture(q, m);
        let path = out.join(format!("q{q}_m{m}.json"));
        let mut text = serde_json::to_string_pretty(&fx).expect("serialize");
        text.push('\n');
        std::fs::write(&path, text).expect("write fixture");
        eprintln!("{} ({} elements)", path.display(), fx.rows.len() + 1);
    }
}
