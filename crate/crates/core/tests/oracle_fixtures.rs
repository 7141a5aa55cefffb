//! ffsieve against the frozen brute-force fixtures in test-data/oracle.

use std::path::PathBuf;

use ffsieve::field::FieldCtx;
use ffsieve::freeness::OrderTester;
use ffsieve::search::{count_in, Scanner};
use ffsieve::par::Exec;
use ffsieve_oracle::{OracleFixture, GRID};

fn load(q: u64, m: usize) -> OracleFixture {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../test-data/oracle/q{q}_m{m}.json"));
    let text = std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    serde_json::from_str(&text).expect("fixture parses")
}

#[test]
fn fixtures_are_current() {
    // regenerating must give byte-identical data
    for (q, m) in [(2, 4), (4, 2), (3, 3)] {
        assert_eq!(load(q, m), ffsieve_oracle::fixture(q, m));
    }
}

#[test]
fn per_element_tables_agree() {
    for (q, m) in GRID {
        let fx = load(q, m);
        let ctx = FieldCtx::new(q, m).unwrap();
        assert_eq!(ctx.top_modulus().coeffs(), &fx.top_modulus[..]);
        let grp = ctx.group_factorization().clone();
        let tester = OrderTester::new(&ctx);
        for row in &fx.rows {
            let x = ctx.elem(row.coeffs.clone()).unwrap();
            let tag = format!("({q},{m}) {:?}", row.coeffs);
            assert_eq!(ctx.mult_order_of(&x, &grp).unwrap(), row.order.into(), "{tag} order");
            assert_eq!(tester.order_degree(&ctx, x.coeffs()), row.order_degree, "{tag} F_q-order degree");
            assert_eq!(ctx.trace(&x).unwrap(), row.trace, "{tag} trace");
            assert_eq!(ctx.norm(&x).unwrap(), row.norm, "{tag} norm");
            assert_eq!(ctx.trace(&ctx.inv(&x).unwrap()).unwrap(), row.trace_inv, "{tag} trace of inverse");
            let mp = ctx.min_poly(&x).unwrap();
            assert_eq!(mp.coeffs(), &row.min_poly[..], "{tag} min poly");
            assert_eq!(mp.degree(), row.degree);
        }
    }
}

#[test]
fn bin_tables_agree() {
    for (q, m) in GRID {
        let fx = load(q, m);
        for b in &fx.bins {
            let s = Scanner::new(q, m, b.r, b.k, b.require_degree_m).unwrap();
            let rep = count_in(&s, Exec::Sequential).unwrap();
            assert_eq!(rep.total, b.total, "({q},{m}) r={} k={}", b.r, b.k);
            let got: Vec<[u64; 3]> =
                rep.bins.iter().filter(|c| c.count > 0).map(|c| [c.b as u64, c.a as u64, c.count]).collect();
            let mut want = b.cells.clone();
            want.sort();
            let mut got = got;
            got.sort();
            assert_eq!(got, want, "({q},{m}) r={} k={}", b.r, b.k);
        }
    }
}
