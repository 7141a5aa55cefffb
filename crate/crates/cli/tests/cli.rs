use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use ffsieve_cli::report::{Query, RunReport, SearchOutcome};
use ffsieve_cli::Cli;
use proptest::prelude::*;

fn run_in(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffsieve")).args(args).env("FFSIEVE_CACHE", cache).output().expect("binary runs")
}

fn report(o: &Output) -> RunReport {
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    let last = text.lines().last().expect("report line");
    let r: RunReport = serde_json::from_str(last).expect("report parses");
    // every report round-trips
    let again: RunReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(again, r);
    r
}

fn tag(r: &RunReport) -> &'static str {
    r.verdicts[0].name()
}

#[test]
fn classify_examples_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("factors.json");

    let o = run_in(&cache, &["classify", "--q", "4", "--m", "8", "--r", "3", "--k", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    assert_eq!(tag(&r), "ResolvedExistsBySearch");
    assert_eq!(r.schema, ffsieve_cli::report::SCHEMA_ID);

    let o = run_in(&cache, &["classify", "--q", "4", "--m", "8", "--no-search"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(tag(&report(&o)), "Undecided");

    let o = run_in(&cache, &["classify", "--q", "2", "--m", "20", "--r", "3", "--k", "1", "--no-search"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(report(&o).verdicts[0].is_proven());

    let o = run_in(&cache, &["classify", "--q", "6", "--m", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a prime power"));

    let o = run_in(&cache, &["classify", "--q", "4"]);
    assert_eq!(o.status.code(), Some(64));
    let o = run_in(&cache, &["classify", "--q", "4", "--m", "8", "--sieve-e", "3"]);
    assert_eq!(o.status.code(), Some(64));

    // r ∤ q^m − 1 is a definitive answer, not an error
    let o = run_in(&cache, &["classify", "--q", "3", "--m", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(tag(&report(&o)), "PreconditionFail");
}

#[test]
fn search_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("factors.json");

    let o = run_in(&cache, &["search", "--q", "5", "--m", "2", "--r", "3", "--k", "1", "--all-ab"]);
    assert_eq!(o.status.code(), Some(0));
    let Some(SearchOutcome::Counts { report: bins }) = report(&o).search else { panic!("counts expected") };
    assert_eq!(bins.bins.len(), 20);
    assert!(bins.nonzero().iter().all(|&(a, _)| a == 0));

    let o = run_in(&cache, &["search", "--q", "2", "--m", "4", "--r", "1", "--k", "0", "--count"]);
    let Some(SearchOutcome::Counts { report: bins }) = report(&o).search else { panic!() };
    // primitive normal elements of F_16
    assert_eq!(bins.total, 4);

    let o = run_in(&cache, &["search", "--q", "4", "--m", "3", "--a", "0", "--b", "1"]);
    let Some(SearchOutcome::Witness { witness, .. }) = report(&o).search else { panic!() };
    assert!(witness.is_none());

    let o = run_in(&cache, &["search", "--q", "4", "--m", "3", "--a", "1", "--b", "2"]);
    let Some(SearchOutcome::Witness { witness: Some(w), .. }) = report(&o).search else { panic!("witness expected") };
    let f = ffsieve::field::BaseField::new(4).unwrap();
    assert_eq!((w.norm, w.trace_inv), (2, f.mul(1, f.inv(2).unwrap())));

    let o = run_in(&cache, &["search", "--q", "101", "--m", "5", "--count"]);
    assert_eq!(o.status.code(), Some(3));

    let o = run_in(&cache, &["search", "--q", "5", "--m", "2", "--all-ab", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("b,a,count,feasible"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn cache_is_an_optimization_only() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("sub").join("factors.json");
    let args = ["classify", "--q", "1000003", "--m", "8", "--sieve-e", "3", "--sieve-f", "1"];
    let cold = report(&run_in(&cache, &args));
    assert_eq!(cold.cache.new_entries, 1);
    let body = std::fs::read_to_string(&cache).unwrap();
    assert!(body.contains("\"500006000027000054000041\""));
    let warm = report(&run_in(&cache, &args));
    assert_eq!(warm.cache.loaded, 1);
    assert!(warm.cache.hits >= 1);
    assert_eq!(cold.verdicts, warm.verdicts);

    let none = report(&run_in(&cache, &["--no-cache", args[0], args[1], args[2], args[3], args[4], args[5], args[6], args[7], args[8]]));
    assert_eq!(none.cache.hits, 0);
    assert_eq!(none.verdicts, cold.verdicts);
}

#[test]
fn tampered_cache_entries_are_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("factors.json");
    std::fs::write(
        &cache,
        r#"{"255": [[3,1],[5,1],[17,1]], "1000": [[2,3],[5,2]], "x": 1,
            "18446744073709551617": [["274177",1],["67280421310721",1]]}"#,
    )
    .unwrap();
    let o = run_in(&cache, &["classify", "--q", "2", "--m", "20", "--no-search"]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("dropping cache entry 1000"), "{err}");
    let r = report(&o);
    assert_eq!((r.cache.loaded, r.cache.rejected), (2, 2));
    let body = std::fs::read_to_string(&cache).unwrap();
    assert!(!body.contains("\"1000\""));
    assert!(body.contains("\"255\": [[3,1],[5,1],[17,1]]"));

    std::fs::write(&cache, "").unwrap();
    let r = report(&run_in(&cache, &["classify", "--q", "2", "--m", "20", "--no-search"]));
    assert_eq!((r.cache.loaded, r.cache.rejected), (0, 0));
}

#[test]
fn table_checkpoint_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("factors.json");
    let ck = dir.path().join("q4q5q7.ckpt");
    let ck_s = ck.to_str().unwrap();
    let o = run_in(&cache, &["table", "--preset", "q4q5q7", "--checkpoint", ck_s]);
    assert_eq!(o.status.code(), Some(0));
    let first = report(&o).table.unwrap();
    assert!(first.diff.exact(), "{:?}", first.diff);
    assert_eq!(first.resumed_blocks, 0);
    let again = report(&run_in(&cache, &["table", "--preset", "q4q5q7", "--checkpoint", ck_s])).table.unwrap();
    assert_eq!(again.resumed_blocks, again.blocks.len());
    assert_eq!(again.diff, first.diff);
    assert_eq!(again.checked, first.checked);

    let o = run_in(&cache, &["table", "--preset", "q2", "--format", "jsonl"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert_eq!(text.lines().next(), Some(r#"{"q":2,"m":8,"status":"open"}"#));
    assert_eq!(run_in(&cache, &["table", "--preset", "m9"]).status.code(), Some(64));
}

#[test]
fn reports_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("factors.json");
    let r = report(&run_in(&cache, &["classify", "--q", "7", "--m", "9", "--k", "1", "--no-search"]));
    let args = r.query.to_args();
    let replay = report(&run_in(&cache, &args.iter().map(String::as_str).collect::<Vec<_>>()));
    assert_eq!(replay.query, r.query);
    assert_eq!(replay.verdicts, r.verdicts);
}

fn query_strategy() -> impl Strategy<Value = Query> {
    prop_oneof![
        (
            2u64..1000,
            1u64..40,
            1u64..10,
            0usize..4,
            proptest::option::of(proptest::collection::vec(0u32..50, 1..4)),
            proptest::option::of((1u64..1_000_000, proptest::collection::vec(0usize..6, 0..3))),
            any::<bool>()
        )
            .prop_map(|(q, m, r, k, g, sieve, no_search)| Query::Classify {
                q,
                m,
                r,
                k,
                g,
                sieve_e: sieve.as_ref().map(|s| s.0.to_string()),
                sieve_f: sieve.map(|s| s.1).filter(|f| !f.is_empty()).or(None),
                no_search,
            })
            .prop_filter("sieve flags come in pairs", |q| match q {
                Query::Classify { sieve_e, sieve_f, .. } => sieve_e.is_some() == sieve_f.is_some(),
                _ => true,
            }),
        proptest::sample::select(ffsieve::tables::Preset::ALL.to_vec()).prop_map(|preset| Query::Table { preset }),
        (2u64..100, 1usize..10, 1u64..5, 0usize..3, 0u32..100, 1u32..100, any::<bool>(), any::<bool>()).prop_map(
            |(q, m, r, k, a, b, all_ab, count)| {
                let given = !(all_ab || count);
                Query::Search { q, m, r, k, a: given.then_some(a), b: given.then_some(b), all_ab, count }
            }
        ),
    ]
}

proptest! {
    #[test]
    fn query_args_roundtrip(q in query_strategy()) {
        let mut argv = vec!["ffsieve".to_string()];
        argv.extend(q.to_args());
        let cli = Cli::try_parse_from(&argv).expect("generated args parse");
        prop_assert_eq!(cli.cmd.query(), q.clone());
        let json = serde_json::to_string(&q).unwrap();
        prop_assert_eq!(serde_json::from_str::<Query>(&json).unwrap(), q);
    }
}
