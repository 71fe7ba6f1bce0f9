use proptest::prelude::*;
use xmf_core::simkernel::{cosine, full_matrix, sim_matrix, topk};
use xmf_core::{EmbeddingSet, Modality, Source};

fn set(source: Source, dim: usize, rows: Vec<Vec<f64>>) -> EmbeddingSet {
    EmbeddingSet::from_rows(
        source,
        Modality::Raw,
        dim,
        rows.into_iter().enumerate().map(|(i, r)| (format!("x{i:03}"), r)),
    )
    .unwrap()
}

fn nonzero_rows(n: std::ops::RangeInclusive<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec(-1.0f64..1.0, dim).prop_map(|mut v| {
            if v.iter().all(|x| x.abs() < 1e-6) {
                v[0] = 1.0;
            }
            v
        }),
        n,
    )
}

fn two_sets() -> impl Strategy<Value = (usize, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..=16).prop_flat_map(|d| (Just(d), nonzero_rows(1..=64, d), nonzero_rows(1..=64, d)))
}

fn assemble(a: &EmbeddingSet, b: &EmbeddingSet, block: usize) -> Vec<f64> {
    let m = b.len();
    let mut out = vec![f64::NAN; a.len() * m];
    for blk in sim_matrix(a, b, block).unwrap() {
        for r in blk.rows.clone() {
            for c in blk.cols.clone() {
                out[r * m + c] = blk.get(r, c);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_size_does_not_matter((d, ra, rb) in two_sets(), b1 in 1usize..70, b2 in 1usize..70) {
        let a = set(Source::Audio, d, ra);
        let b = set(Source::Image, d, rb);
        let x = assemble(&a, &b, b1);
        let y = assemble(&a, &b, b2);
        prop_assert!(x.iter().all(|v| v.is_finite()));
        for (u, v) in x.iter().zip(&y) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
        prop_assert_eq!(&x, &full_matrix(&a, &b).unwrap());
        for i in 0..a.len() {
            for j in 0..b.len() {
                let direct = cosine(a.row(i), b.row(j)).unwrap();
                prop_assert!((x[i * b.len() + j] - direct).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn self_similarity_is_symmetric_with_unit_diagonal((dim, rows) in (1usize..=16).prop_flat_map(|d| (Just(d), nonzero_rows(1..=64, d)))) {
        let a = set(Source::Audio, dim, rows).normalize().unwrap();
        let m = full_matrix(&a, &a).unwrap();
        let n = a.len();
        for i in 0..n {
            prop_assert!((m[i * n + i] - 1.0).abs() <= 1e-12);
            for j in 0..n {
                prop_assert!((m[i * n + j] - m[j * n + i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn topk_is_a_prefix_of_the_sorted_row((d, ra, rb) in two_sets(), k in 1usize..80) {
        let a = set(Source::Audio, d, ra);
        let b = set(Source::Image, d, rb);
        let lists = topk(&a, &b, k).unwrap();
        prop_assert_eq!(lists.len(), a.len());
        for (q, list) in lists.iter().enumerate() {
            let mut all: Vec<(f64, String, usize)> = (0..b.len())
                .map(|j| (cosine(a.row(q), b.row(j)).unwrap(), b.id(j).to_string(), j))
                .collect();
            all.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then_with(|| x.1.cmp(&y.1)));
            let want: Vec<(usize, f64)> = all.iter().take(k).map(|(s, _, j)| (*j, *s)).collect();
            let got: Vec<(usize, f64)> = list.neighbors.iter().map(|n| (n.index, n.similarity)).collect();
            prop_assert_eq!(list.query_index, q);
            prop_assert_eq!(got, want);
        }
    }
}
