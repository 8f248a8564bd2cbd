use finger::graph_file::{decode_graph, encode_graph, load_graph, save_graph};
use finger::index_file::{
    decode_index, encode_index, index_file_size, load_index, save_index, INDEX_HEADER_BYTES,
};
use finger::synth::{Mixture, MixtureSpec};
use finger::vecs::{load_fvecs, load_ground_truth, save_fvecs, save_ground_truth};
use finger::FileError;
use finger_core::finger::{train_finger, FingerConfig};
use finger_core::{
    brute_force_knn, build_graph, edge_count, GraphParams, Metric, SearchGraph, VectorSet,
};

fn dataset(n: usize, dim: usize, metric: Metric) -> VectorSet {
    let mix = Mixture::new(MixtureSpec {
        dim,
        clusters: 4,
        ..MixtureSpec::default()
    });
    mix.vectors(n, 0, metric).unwrap()
}

fn graph(data: &VectorSet) -> SearchGraph {
    build_graph(
        data,
        &GraphParams {
            max_degree: 8,
            ef_construction: 40,
            seed: 3,
        },
    )
    .unwrap()
}

#[test]
fn graph_round_trip_is_bit_exact() {
    let data = dataset(800, 12, Metric::L2);
    let g = graph(&data);
    let bytes = encode_graph(&g);
    let back = decode_graph(&bytes).unwrap();
    assert_eq!(back, g);
    assert_eq!(encode_graph(&back), bytes);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.bin");
    save_graph(&path, &g).unwrap();
    assert_eq!(load_graph(&path).unwrap(), g);
}

#[test]
fn graph_truncation_and_magic() {
    let data = dataset(100, 4, Metric::L2);
    let bytes = encode_graph(&graph(&data));
    for cut in [0, 5, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(decode_graph(&bytes[..cut]).is_err(), "cut {cut}");
    }
    let mut bad = bytes.clone();
    bad[..8].copy_from_slice(b"NOTAGRPH");
    let msg = decode_graph(&bad).unwrap_err().to_string();
    assert!(
        msg.contains("NOTAGRPH") && msg.contains("FNGRGRPH"),
        "{msg}"
    );

    let mut future = bytes.clone();
    future[8] = 9;
    assert!(matches!(
        decode_graph(&future),
        Err(FileError::Version {
            found: 9,
            expected: 1
        })
    ));

    let mut trailing = bytes;
    trailing.push(0);
    assert!(matches!(
        decode_graph(&trailing),
        Err(FileError::Trailing { .. })
    ));
}

#[test]
fn index_round_trip_and_size() {
    for metric in [Metric::L2, Metric::Cosine] {
        let data = dataset(600, 16, metric);
        let g = graph(&data);
        let index = train_finger(&g, &data, &FingerConfig::fixed(8)).unwrap();
        let bytes = encode_index(&index);
        assert_eq!(bytes.len(), index_file_size(8, 16, 600, edge_count(&g)));
        assert_eq!(bytes.len(), INDEX_HEADER_BYTES + 4 * index.extra_floats());
        let back = decode_index(&bytes, &g).unwrap();
        assert_eq!(back, index);
        assert_eq!(encode_index(&back), bytes);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.bin");
        save_index(&path, &index).unwrap();
        assert_eq!(load_index(&path, &g).unwrap(), index);
    }
}

#[test]
fn index_rejects_other_graph() {
    let data = dataset(300, 8, Metric::L2);
    let g = graph(&data);
    let index = train_finger(&g, &data, &FingerConfig::fixed(4)).unwrap();
    let other = graph(&dataset(200, 8, Metric::L2));
    assert!(decode_index(&encode_index(&index), &other).is_err());
    let bytes = encode_index(&index);
    assert!(decode_index(&bytes[..bytes.len() - 4], &g).is_err());
}

#[test]
fn vectors_and_truth_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(50, 6, Metric::L2);
    let path = dir.path().join("x.fvecs");
    save_fvecs(&path, &data).unwrap();
    assert_eq!(load_fvecs(&path, Metric::L2).unwrap(), data);

    let truth = brute_force_knn(&data, &data.slice(0, 5).unwrap(), 3).unwrap();
    let gt_path = dir.path().join("gt.ivecs");
    save_ground_truth(&gt_path, &truth).unwrap();
    let back = load_ground_truth(&gt_path).unwrap();
    assert_eq!(back.all_ids(), truth.all_ids());
    assert_eq!(back.k(), 3);

    let empty = dir.path().join("empty.fvecs");
    std::fs::write(&empty, b"").unwrap();
    assert_eq!(
        load_fvecs(&empty, Metric::L2).unwrap_err().to_string(),
        "no records"
    );
}

proptest::proptest! {
    #[test]
    fn fvecs_encoding_round_trips(dim in 1usize..12, rows in 1usize..20, seed in 0u64..1000) {
        let values: Vec<f32> = (0..dim * rows).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f32 * 0.37 - 100.0).collect();
        let parsed = finger::vecs::parse_fvecs(&finger::vecs::encode_fvecs(&values, dim)).unwrap();
        proptest::prop_assert_eq!(parsed.dim, dim);
        proptest::prop_assert_eq!(parsed.data, values);
    }
}
