use std::fs;
use std::path::PathBuf;

use sparseness::checkpoint::Checkpoint;
use sparseness::error::{Error, IdxError};
use sparseness::mnist::{jitter8, load_idx, subset, write_idx, LabeledDataset, NUM_CLASSES};
use sparseness::soae::{SoaeConfig, SoaeParams, Transfer};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn eval_set() -> LabeledDataset {
    load_idx(
        data("digits-eval-images-idx3-ubyte"),
        data("digits-eval-labels-idx1-ubyte"),
    )
    .unwrap()
}

#[test]
fn fixtures_load_and_round_trip_byte_for_byte() {
    let ds = eval_set();
    assert_eq!(ds.len(), 1000);
    assert_eq!(ds.shape(), (28, 28));
    assert!(ds.samples().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    assert!(ds.class_counts().iter().all(|&c| c > 50));

    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    write_idx(&ds, &img, &lab).unwrap();
    assert_eq!(fs::read(&img).unwrap(), fs::read(data("digits-eval-images-idx3-ubyte")).unwrap());
    assert_eq!(fs::read(&lab).unwrap(), fs::read(data("digits-eval-labels-idx1-ubyte")).unwrap());
    assert_eq!(load_idx(&img, &lab).unwrap(), ds);
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ds = LabeledDataset::new(vec![vec![0.5; 4], vec![1.0; 4]], vec![1, 2], (2, 2)).unwrap();
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    write_idx(&ds, &img, &lab).unwrap();
    let good_img = fs::read(&img).unwrap();
    let good_lab = fs::read(&lab).unwrap();

    let bad = dir.path().join("bad");
    let mut swapped = good_img.clone();
    swapped[3] = 0x01;
    fs::write(&bad, &swapped).unwrap();
    assert!(matches!(
        load_idx(&bad, &lab),
        Err(Error::Idx(IdxError::BadMagic { found: 0x801, .. }))
    ));

    fs::write(&bad, &good_img[..good_img.len() - 1]).unwrap();
    assert!(matches!(
        load_idx(&bad, &lab),
        Err(Error::Idx(IdxError::Truncated { .. }))
    ));

    let mut short = good_lab[..good_lab.len() - 1].to_vec();
    short[7] = 1;
    fs::write(&bad, &short).unwrap();
    assert!(matches!(
        load_idx(&img, &bad),
        Err(Error::Idx(IdxError::CountMismatch { images: 2, labels: 1 }))
    ));

    let mut wrong = good_lab.clone();
    wrong[9] = 10;
    fs::write(&bad, &wrong).unwrap();
    assert!(matches!(
        load_idx(&img, &bad),
        Err(Error::Idx(IdxError::LabelOutOfRange { index: 1, label: 10, .. }))
    ));

    assert!(matches!(
        load_idx(dir.path().join("missing"), &lab),
        Err(Error::Idx(IdxError::Io { .. }))
    ));
}

#[test]
fn jitter_preserves_labels_and_pixel_mass_bounds() {
    let ds = subset(&eval_set(), 100, 3).unwrap();
    let j = jitter8(&ds).unwrap();
    assert_eq!(j.len(), 900);
    for (a, b) in ds.class_counts().iter().zip(j.class_counts()) {
        assert_eq!(9 * a, b);
    }
    for (k, chunk) in j.samples().chunks(9).enumerate() {
        let mass: f64 = chunk[0].iter().sum();
        assert_eq!(chunk[0], ds.samples()[k]);
        for shifted in &chunk[1..] {
            assert!(shifted.iter().sum::<f64>() <= mass + 1e-9);
        }
    }
}

#[test]
fn subsets_are_deterministic_and_balanced() {
    let ds = eval_set();
    let a = subset(&ds, 500, 42).unwrap();
    assert_eq!(a, subset(&ds, 500, 42).unwrap());
    assert_ne!(a.labels(), subset(&ds, 500, 43).unwrap().labels());
    let expected = 500.0 / NUM_CLASSES as f64;
    for c in a.class_counts() {
        assert!((c as f64 - expected).abs() <= 0.2 * expected, "{c}");
    }
    let all = subset(&ds, 1000, 1).unwrap();
    assert_eq!(all.class_counts(), ds.class_counts());
}

#[test]
fn checkpoint_files_round_trip() {
    let ds = subset(&eval_set(), 20, 0).unwrap();
    let cfg = SoaeConfig {
        n_hidden: 5,
        transfer: Transfer::Sigma(0.6),
        ..SoaeConfig::default()
    };
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    let params: SoaeParams = sparseness::soae::init_params(&ds, 10, &cfg, &mut rng).unwrap();
    let ck = Checkpoint { params, config: cfg };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    ck.save(&path).unwrap();
    assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    fs::write(&path, b"garbage").unwrap();
    assert!(Checkpoint::load(&path).is_err());
}
