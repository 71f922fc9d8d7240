//! On-disk formats shared with the exporter: bundles, checkpoints, CSVs.

mod common;

use std::fs;
use std::io::Cursor;
use std::path::Path;

use common::Fixture;
use contextcurate::demo::learnable_bundles;
use contextcurate::embed::{read_bundles, write_bundles, BundleSet, EmbeddingBundle, PromptVariant};
use contextcurate::features::fit_normalizer;
use contextcurate::features::demo_features;
use contextcurate::head::{init_head, read_checkpoint, write_checkpoint, Dropout, HeadConfig, CHECKPOINT_MAGIC};
use contextcurate::report::read_predictions_csv;
use serde_json::Value;

#[test]
fn bundle_index_fields_and_payload_layout() {
    let fx = Fixture::new(1);
    let index = fs::read_to_string(&fx.index_path).unwrap();
    let payload = fs::read(fx.path("emb.bin")).unwrap();
    let mut expected_offset = 0u64;
    for line in index.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let obj = v.as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        for k in ["id", "dim", "n_tokens", "offsets", "byte_offset", "has_eos", "prompt_variant"] {
            assert!(keys.contains(&k), "missing {k} in {line}");
        }
        assert_eq!(obj["byte_offset"].as_u64().unwrap(), expected_offset);
        assert_eq!(obj["prompt_variant"], "instruction");
        let rows = obj["n_tokens"].as_u64().unwrap() + u64::from(obj["has_eos"].as_bool().unwrap());
        expected_offset += rows * obj["dim"].as_u64().unwrap() * 4;
    }
    assert_eq!(expected_offset, payload.len() as u64);
}

#[test]
fn bundle_files_round_trip_bit_for_bit() {
    let fx = Fixture::new(2);
    let set = BundleSet::load(&fx.index_path, BundleSet::payload_path(&fx.index_path)).unwrap();
    assert_eq!(set.len(), fx.corpus.len());
    let index2 = fx.path("copy.index.jsonl");
    set.save(&index2, BundleSet::payload_path(&index2)).unwrap();
    assert_eq!(fs::read(&fx.index_path).unwrap(), fs::read(&index2).unwrap());
    assert_eq!(fs::read(fx.path("emb.bin")).unwrap(), fs::read(fx.path("copy.bin")).unwrap());
}

#[test]
fn hand_written_bundle_is_read() {
    let index = r#"{"id":"c1","dim":2,"n_tokens":2,"offsets":[[0,3],[4,9]],"byte_offset":0,"has_eos":true,"prompt_variant":"plain"}"#;
    let payload: Vec<u8> = [1.0f32, 2.0, 3.0, 4.0, 0.5, -0.5].iter().flat_map(|v| v.to_le_bytes()).collect();
    let b = read_bundles(index.as_bytes(), &payload, Path::new("x.index.jsonl")).unwrap();
    assert_eq!(b[0].row(1), &[3.0, 4.0]);
    assert_eq!(b[0].eos(), Some(&[0.5, -0.5][..]));
    assert_eq!(b[0].prompt_variant(), Some(PromptVariant::Plain));
}

#[test]
fn truncated_payload_names_the_line() {
    let index = "\n{\"id\":\"c1\",\"dim\":4,\"n_tokens\":1,\"offsets\":[[0,3]],\"byte_offset\":0,\"has_eos\":false,\"prompt_variant\":null}";
    let err = read_bundles(index.as_bytes(), &[0u8; 8], Path::new("x.index.jsonl")).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn eos_only_bundle_round_trips() {
    let b = EmbeddingBundle::eos_only("c9", vec![0.25, -1.5, 3.0], Some(PromptVariant::Hybrid)).unwrap();
    let (mut idx, mut pay) = (Vec::new(), Vec::new());
    write_bundles(std::slice::from_ref(&b), &mut idx, &mut pay).unwrap();
    let back = read_bundles(idx.as_slice(), &pay, Path::new("m")).unwrap();
    assert_eq!(back, vec![b]);
}

#[test]
fn checkpoint_round_trip_with_normalizer() {
    let fx = Fixture::new(3);
    let table = demo_features(&fx.corpus);
    let ids: Vec<&str> = fx.corpus.ids().collect();
    let norm = fit_normalizer(&table, ids.iter().copied()).unwrap();
    let cfg = HeadConfig::new(8 + table.width()).with_hidden(vec![6, 3]).with_dropout(0.1);
    let head = init_head(&cfg, 99).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&head, Some(&norm), &mut bytes).unwrap();
    assert_eq!(&bytes[..8], CHECKPOINT_MAGIC);
    let expected_len = 8 + 8 + 8 + 2 * 8 + 8 + 8 + 8 + head.n_params() * 8 + 8 + 2 * table.width() * 8 + 8;
    assert_eq!(bytes.len(), expected_len);
    let (back, back_norm) = read_checkpoint(Cursor::new(&bytes)).unwrap();
    assert_eq!(back.params(), head.params());
    assert_eq!(back.config(), head.config());
    assert_eq!(back_norm.as_ref(), Some(&norm));
    let x = vec![0.3; cfg.input_dim];
    assert_eq!(back.forward(&x, Dropout::Off).unwrap(), head.forward(&x, Dropout::Off).unwrap());
}

#[test]
fn checkpoint_rejects_corruption() {
    let head = init_head(&HeadConfig::new(4).with_hidden(vec![3]), 1).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&head, None, &mut bytes).unwrap();

    let mut trailing = bytes.clone();
    trailing.push(0);
    assert!(read_checkpoint(Cursor::new(&trailing)).unwrap_err().to_string().contains("trailing"));

    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(read_checkpoint(Cursor::new(&magic)).is_err());

    let truncated = &bytes[..bytes.len() - 3];
    assert!(read_checkpoint(Cursor::new(truncated)).unwrap_err().to_string().contains("truncated"));
}

#[test]
fn predictions_csv_rejects_duplicates_and_bad_numbers() {
    let p = Path::new("p.csv");
    let dup = "context_id,score,gold\na,0.1,1\na,0.2,1\n";
    assert!(read_predictions_csv(dup.as_bytes(), p).is_err());
    let bad = "context_id,score,gold\na,zero,1\n";
    let err = read_predictions_csv(bad.as_bytes(), p).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
    let ok = "context_id,score,gold\nb,0.5,-1\na,0.1,2\n";
    assert_eq!(read_predictions_csv(ok.as_bytes(), p).unwrap().len(), 2);
}

#[test]
fn learnable_bundles_survive_the_file_format() {
    let fx = Fixture::new(4);
    let fresh = learnable_bundles(&fx.corpus, 8, 0.1, 4).unwrap();
    let loaded = BundleSet::load(&fx.index_path, BundleSet::payload_path(&fx.index_path)).unwrap();
    for b in fresh.iter() {
        assert_eq!(loaded.get(b.context_id()).unwrap().eos(), b.eos());
    }
}
