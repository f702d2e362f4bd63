//! The default catalog against an independent enumeration of its placement
//! rules.

use std::collections::BTreeSet;

use migplan::catalog::Catalog;

/// Every maximal set of non-overlapping placements, as sorted (start, size) lists.
fn maximal_packings(rules: &[(u8, Vec<u8>)]) -> Vec<Vec<(u8, u8)>> {
    let all: Vec<(u8, u8)> = rules.iter().flat_map(|(k, starts)| starts.iter().map(move |&s| (s, *k))).collect();
    let mask = |(s, k): (u8, u8)| ((1u16 << k) - 1) << s;
    let mut out = Vec::new();
    for subset in 0u32..(1 << all.len()) {
        let chosen: Vec<(u8, u8)> = (0..all.len()).filter(|i| subset >> i & 1 == 1).map(|i| all[i]).collect();
        let mut used = 0u16;
        let mut ok = true;
        for &p in &chosen {
            if used & mask(p) != 0 {
                ok = false;
                break;
            }
            used |= mask(p);
        }
        if ok && all.iter().all(|&p| chosen.contains(&p) || used & mask(p) != 0) {
            let mut c = chosen;
            c.sort();
            out.push(c);
        }
    }
    out
}

#[test]
fn default_catalog_is_one_layout_per_maximal_multiset() {
    let catalog = Catalog::default_a100();
    let rules: Vec<(u8, Vec<u8>)> = catalog.rules.iter().map(|r| (r.size, r.starts.clone())).collect();
    let packings = maximal_packings(&rules);
    assert_eq!(packings.len(), 19);
    let multisets: BTreeSet<Vec<u8>> = packings
        .iter()
        .map(|p| {
            let mut m: Vec<u8> = p.iter().map(|&(_, k)| k).collect();
            m.sort_unstable_by(|a, b| b.cmp(a));
            m
        })
        .collect();
    assert_eq!(multisets.len(), 12);
    let shipped: BTreeSet<Vec<u8>> = catalog.configurations.iter().map(|c| c.size_multiset()).collect();
    assert_eq!(shipped, multisets);
    // each shipped layout is itself one of the maximal packings
    for c in &catalog.configurations {
        let mut layout: Vec<(u8, u8)> = c.slots.iter().map(|s| (s.slice_start, s.size)).collect();
        layout.sort();
        assert!(packings.contains(&layout), "{}", c.id);
    }
}
