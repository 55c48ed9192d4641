use vqic_core::codebook::{train_root_with, LloydParams};
use vqic_core::metrics::raw_index_bpp;
use vqic_core::pipeline::{decode_stream, encode_image, rd_point};
use vqic_core::restoration::{restore, train_predictor};
use vqic_core::{analyze, apply_mask, psnr, quantize, synth, synthesize, TransformSpec};

#[test]
fn transform_fidelity_is_frozen() {
    let img = synth::natural_image(128, 96, 3);
    let spec = TransformSpec::new(64).unwrap();
    let back = synthesize(&analyze(&img, &spec), &spec, 96, 128).unwrap();
    let db = psnr(&img, &back).unwrap();
    assert!((db - 26.385_800_113_3).abs() < 1e-6, "{db}");

    let full = TransformSpec::new(768).unwrap();
    assert_eq!(synthesize(&analyze(&img, &full), &full, 96, 128).unwrap(), img);
}

#[test]
fn photo_sized_k8_stays_under_rate_bound() {
    let spec = TransformSpec::new(64).unwrap();
    let training: Vec<_> = synth::corpus(4, 768, 512, 10).iter().map(|i| analyze(i, &spec)).collect();
    let params = LloydParams { max_iters: 30, ..LloydParams::default() };
    let cb = train_root_with(&training, 8, 1, &params).unwrap().codebook;
    for img in synth::corpus(3, 768, 512, 900) {
        let enc = encode_image(&img, &spec, &cb).unwrap();
        let point = rd_point(&img, &enc, &cb, &spec).unwrap();
        assert!(point.bpp_payload <= 0.013, "{}", point.bpp_payload);
        assert!(point.bpp_payload <= raw_index_bpp(1536, 8, 512, 768) + 16.0 * 8.0 / 393_216.0);
        assert_eq!(enc.stream.len(), enc.payload_len + 34);
        assert!((point.bpp_file - point.bpp_payload - 34.0 * 8.0 / 393_216.0).abs() < 1e-12);

        let dec = decode_stream(&enc.stream, &cb).unwrap();
        assert_eq!(dec.index_map, enc.index_map);
        assert_eq!(dec.image.width(), 768);
    }
}

#[test]
fn predictor_beats_uniform_on_held_out_maps() {
    let spec = TransformSpec::new(64).unwrap();
    let training: Vec<_> = synth::corpus(6, 256, 192, 40).iter().map(|i| analyze(i, &spec)).collect();
    let cb = train_root_with(&training, 32, 2, &LloydParams { max_iters: 20, ..LloydParams::default() })
        .unwrap()
        .codebook;
    let maps = |first: u64, n: usize| -> Vec<_> {
        synth::corpus(n, 256, 192, first).iter().map(|i| quantize(&analyze(i, &spec), &cb).unwrap()).collect()
    };
    let model = train_predictor(&maps(100, 24), cb.size()).unwrap();
    let held_out = maps(300, 8);
    let nll = model.nll_bits(&held_out).unwrap();
    assert!(nll <= (cb.size() as f64).log2() - 0.1, "held-out NLL {nll}");

    for (i, im) in held_out.iter().enumerate() {
        let masked = apply_mask(im, 0.3, i as u64);
        let restored = restore(&masked, &model).unwrap();
        assert_eq!(restored, restore(&masked, &model).unwrap());
        for (j, &lost) in masked.mask().iter().enumerate() {
            if !lost {
                assert_eq!(restored.indices()[j], im.indices()[j]);
            }
        }
    }
}
