//! Shared fixtures and generators for the integration suites.
//
// Each integration target compiles this module separately and uses a subset.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ekgd_core::event_model::{parse_event_table, EventTable, IngestConfig};
use ekgd_core::poset::Poset;

/// Fourteen purchase-to-pay events with multi-valued invoice cells.
pub fn tab1_csv() -> &'static str {
    "event,Activity,Actor,Order,SupplierOrder,Invoice,Payment\n\
     e_1,Create Order,R_1,O_1,,,\n\
     e_2,Create Order,R_1,O_2,,,\n\
     e_3,Place S.O.,R_1,,A,,\n\
     e_4,Place S.O.,R_3,,B,,\n\
     e_5,Create Invoice,R_3,O_2,,I_2,\n\
     e_6,Receive S.O.,R_2,,A,,\n\
     e_7,Update S.O.,R_1,O_2,B,,\n\
     e_9,Update Invoice,R_2,,A,I_2,\n\
     e_18,Create Invoice,R_3,O_1,,I_1,\n\
     e_19,Receive S.O.,R_2,,B,,\n\
     e_28,Ship Order,R_4,O_1,,,\n\
     e_29,Receive Payment,R_5,,,,P_1\n\
     e_30,Clear Invoice,R_5,,,I_1;I_2,P_1\n\
     e_34,Ship Order,R_4,O_2,,,\n"
}

/// Eight events over four columns: X1 constant, X2 four pairs, X3 and X4
/// sparse with blanks.
pub fn tab3_csv() -> &'static str {
    "event,X1,X2,X3,X4\n\
     e1,A,B,F,\n\
     e2,A,B,F,H\n\
     e3,A,C,,H\n\
     e4,A,C,,\n\
     e5,A,D,G,\n\
     e6,A,D,G,I\n\
     e7,A,E,,I\n\
     e8,A,E,,\n"
}

pub fn tab1_table() -> EventTable {
    parse_event_table(tab1_csv().as_bytes(), &IngestConfig::default()).unwrap()
}

pub fn tab3_table() -> EventTable {
    parse_event_table(tab3_csv().as_bytes(), &IngestConfig::default()).unwrap()
}

pub fn idx(table: &EventTable, id: &str) -> usize {
    table
        .event_index(id)
        .unwrap_or_else(|| panic!("no event {id}"))
}

/// Unordered id pairs as normalized index pairs.
pub fn unordered_pairs(table: &EventTable, pairs: &[(&str, &str)]) -> BTreeSet<(usize, usize)> {
    pairs
        .iter()
        .map(|(a, b)| {
            let (a, b) = (idx(table, a), idx(table, b));
            (a.min(b), a.max(b))
        })
        .collect()
}

/// Ordered id pairs as index pairs.
pub fn ordered_pairs(table: &EventTable, pairs: &[(&str, &str)]) -> BTreeSet<(usize, usize)> {
    pairs
        .iter()
        .map(|(a, b)| (idx(table, a), idx(table, b)))
        .collect()
}

/// Random poset: forward edges drawn independently with the given density.
pub fn random_poset(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Poset {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                edges.push((a, b));
            }
        }
    }
    Poset::new(n, edges).expect("forward edges are acyclic")
}

/// Random weakly connected poset, by rejection.
pub fn random_connected_poset(rng: &mut ChaCha8Rng, n: usize) -> Poset {
    loop {
        let density = rng.random_range(0.2..0.9);
        let poset = random_poset(rng, n, density);
        if ekgd_core::poset::connected_components(&poset).len() == 1 {
            return poset;
        }
    }
}

/// Random event table: up to `max_features` columns over small alphabets,
/// with empty and occasionally multi-valued cells.
pub fn random_table(rng: &mut ChaCha8Rng, max_events: usize, max_features: usize) -> EventTable {
    let n = rng.random_range(2..=max_events.max(2));
    let m = rng.random_range(1..=max_features.max(1));
    let ids: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let features: Vec<String> = (0..m).map(|i| format!("f{i}")).collect();
    let values = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let alphabet = rng.random_range(1..=4usize);
                    let mut set = BTreeSet::new();
                    if rng.random::<f64>() < 0.8 {
                        set.insert(format!("v{}", rng.random_range(0..alphabet)));
                        if rng.random::<f64>() < 0.15 {
                            set.insert(format!("v{}", rng.random_range(0..alphabet)));
                        }
                    }
                    set
                })
                .collect()
        })
        .collect();
    EventTable::new(ids, features, values).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
