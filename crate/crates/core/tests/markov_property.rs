//! Record pairs identified from stick fields: given (R_2, A_2), the law of
//! the next rank must not depend on how the field reached that state.

use rayon::prelude::*;

use kingman_records::ra_chain::r_pmf_table;
use kingman_records::stats::{chi2_gof, chi2_two_sample};
use kingman_records::{RaState, StickField};

const FIELDS: u64 = 200_000;
const CAP: u64 = 2_000;

#[test]
fn next_rank_law_ignores_the_prefix() {
    let target = RaState { r: 2, a: 5 };
    // (A_1, R_3 - R_2) for fields passing through the target at step 2.
    let hits: Vec<(u128, u128)> = (0..FIELDS)
        .into_par_iter()
        .filter_map(|i| {
            let out = StickField::new(101, i).identify_ra_bounded(3, CAP).unwrap();
            if out.pairs.len() == 3 && out.pairs[1] == target {
                Some((out.pairs[0].a, out.pairs[2].r - target.r))
            } else {
                None
            }
        })
        .collect();
    let support = target.r_support() as usize;
    let counts_from = |a1: u128| {
        let mut c = vec![0u64; support];
        for &(a, x) in &hits {
            if a == a1 {
                c[x as usize - 1] += 1;
            }
        }
        c
    };
    let (via2, via3) = (counts_from(2), counts_from(3));
    assert!(via2.iter().sum::<u64>() > 3000 && via3.iter().sum::<u64>() > 1500);
    let split = chi2_two_sample(&via2, &via3).unwrap();
    assert!(split.pass, "{}", split.to_json().unwrap());
    let mut pooled = vec![0u64; support];
    for &(_, x) in &hits {
        pooled[x as usize - 1] += 1;
    }
    let fit = chi2_gof(&pooled, &r_pmf_table(&target)).unwrap();
    assert!(fit.pass, "{}", fit.to_json().unwrap());
}
