use choreo_core::asset::{AssetLibrary, GestureUnit, PlacementSpec, TourPlan, VisualAsset};
use choreo_core::compile::{compile, Clients, CompileInput};
use choreo_core::compose::Selection;
use choreo_core::config::Config;
use choreo_core::script::{normalize_whitespace, SentenceSplitter, SpeechSegment, StubSpeech, TemplateTextGen};
use choreo_core::timeline::{align, validate_timeline, AlignConfig, AlignError, AlignWarning};
use choreo_testkit::{gen, oracle, rng};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;

/// Sentence starts in text whose only terminators end sentences.
fn sentence_starts(norm: &str) -> Vec<usize> {
    let chars: Vec<char> = norm.chars().collect();
    let mut starts = vec![0];
    for i in 1..chars.len() {
        if chars[i] == ' ' && ".!?".contains(chars[i - 1]) {
            starts.push(i + 1);
        }
    }
    starts
}

#[test]
fn fuzzed_alignments_obey_every_law() {
    let mut rng = rng(11);
    let splitter = SentenceSplitter::default();
    let mut extended = 0;
    let mut multi = 0;
    for case in 0..1000 {
        let (segments, selections) = gen::align_case(&mut rng);
        let cfg = AlignConfig {
            base_pause_ms: rng.random_range(0..=2000),
            max_pause_extension_ms: None,
        };
        let aligned = align("fuzz", None, &segments, &selections, &splitter, &cfg).unwrap();
        let t = &aligned.timeline;
        let report = validate_timeline(t);
        assert!(report.is_clean(), "case {case}: {:?}", report.violations);
        let laws = oracle::timeline_laws(t);
        assert!(laws.is_empty(), "case {case}: {laws:?}");

        assert_eq!(t.speech.len(), segments.len());
        assert_eq!(t.visuals.len(), selections.iter().map(|s| s.visuals.len()).sum::<usize>());
        assert_eq!(t.gestures.len(), selections.iter().map(|s| s.gestures.len()).sum::<usize>());
        let durations: u64 = segments.iter().map(|s| s.duration_ms().unwrap()).sum();
        let pauses: u64 = t.speech.iter().map(|s| s.pause_after_ms).sum();
        assert_eq!(t.end_ms(), durations + pauses);

        for (seg, sel) in segments.iter().zip(&selections) {
            let g: u64 = sel.gestures.iter().map(|g| g.duration_ms).sum();
            let over = g.saturating_sub(seg.duration_ms().unwrap());
            let warned = aligned.warnings.iter().any(|w| {
                matches!(w, AlignWarning::PauseExtended { segment_id, extension_ms }
                    if *segment_id == seg.id && *extension_ms == over)
            });
            assert_eq!(warned, over > 0, "case {case}: {}", seg.id);
            extended += (over > 0) as usize;
            multi += (sel.visuals.len() > 1) as usize;
        }
    }
    assert!(extended > 100 && multi > 500, "{extended} extended, {multi} multi-image");
}

#[test]
fn image_starts_follow_sentence_offsets() {
    let mut rng = rng(12);
    let splitter = SentenceSplitter::default();
    let mut checked = 0;
    for _ in 0..1000 {
        let (segments, selections) = gen::align_case(&mut rng);
        let t = align("fuzz", None, &segments, &selections, &splitter, &AlignConfig::default())
            .unwrap()
            .timeline;
        let speech: BTreeMap<_, _> = t.speech.iter().map(|s| (s.segment_id.as_str(), s)).collect();
        for (seg, sel) in segments.iter().zip(&selections) {
            let n = sel.visuals.len();
            let dur = seg.duration_ms().unwrap();
            if n < 2 || dur < 1000 {
                continue;
            }
            let norm = normalize_whitespace(&seg.text);
            let starts = sentence_starts(&norm);
            let sp = speech[seg.id.as_str()];
            let want = if starts.len() >= n {
                oracle::fraction_boundaries(sp.start_ms, dur, norm.chars().count(), &starts[..n])
            } else {
                (0..n as u64).map(|i| sp.start_ms + i * dur / n as u64).collect()
            };
            let got: Vec<u64> = t.visuals.iter().filter(|v| v.segment_id == seg.id).map(|v| v.start_ms).collect();
            assert_eq!(got, want, "{}: {:?}", seg.id, norm);
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

/// One marked segment with `images` visuals and gestures of the given lengths.
fn one_segment(text: &str, duration_ms: u64, images: usize, gestures: &[u64]) -> (Vec<SpeechSegment>, Vec<Selection>) {
    let mut rng = rng(0);
    let (mut segs, mut sels) = loop {
        let (s, l) = gen::align_case(&mut rng);
        if s[0].learning_point_id.is_some() {
            break (s, l);
        }
    };
    segs.truncate(1);
    sels.truncate(1);
    segs[0].text = text.into();
    segs[0].audio.as_mut().unwrap().duration_ms = duration_ms;
    let proto_v = VisualAsset {
        id: "img".into(),
        image_ref: "img.png".into(),
        description: String::new(),
        learning_point_id: "lp".into(),
        placement: PlacementSpec::NearbySurface { surface_id: "w".into() },
        sequence_rank: 1,
    };
    sels[0].visuals = (0..images)
        .map(|i| VisualAsset {
            id: format!("img{i}"),
            sequence_rank: i as u32 + 1,
            ..proto_v.clone()
        })
        .collect();
    let proto_g = gen::align_case(&mut rng).1.into_iter().flat_map(|s| s.gestures).next();
    let proto_g = proto_g.unwrap_or_else(|| panic!("generator produced no gesture"));
    sels[0].gestures = gestures
        .iter()
        .enumerate()
        .map(|(i, &d)| GestureUnit {
            id: format!("g{i}"),
            duration_ms: d,
            ..proto_g.clone()
        })
        .collect();
    (segs, sels)
}

#[test]
fn hand_worked_segments() {
    let splitter = SentenceSplitter::default();
    let cfg = AlignConfig::default();

    // "A. B." has 5 chars and the second sentence starts at char 3, so over
    // 1000 ms the second image starts at 600.
    let (s, l) = one_segment("A. B.", 1000, 2, &[]);
    let t = align("t", None, &s, &l, &splitter, &cfg).unwrap().timeline;
    let spans: Vec<_> = t.visuals.iter().map(|v| (v.start_ms, v.end_ms)).collect();
    assert_eq!(spans, vec![(0, 600), (600, 1000)]);

    // Three images over two sentences split the window evenly.
    let (s, l) = one_segment("One two. Three.", 900, 3, &[]);
    let t = align("t", None, &s, &l, &splitter, &cfg).unwrap().timeline;
    let spans: Vec<_> = t.visuals.iter().map(|v| (v.start_ms, v.end_ms)).collect();
    assert_eq!(spans, vec![(0, 300), (300, 600), (600, 900)]);

    // 4 s of speech with 6 s of gestures: the pause grows by 2 s.
    let (s, l) = one_segment("Hold it.", 4000, 0, &[2500, 3500]);
    let out = align("t", None, &s, &l, &splitter, &cfg).unwrap();
    let sp = &out.timeline.speech[0];
    assert_eq!((sp.start_ms, sp.end_ms, sp.pause_after_ms), (0, 4000, 2500));
    let g: Vec<_> = out.timeline.gestures.iter().map(|g| (g.start_ms, g.end_ms)).collect();
    assert_eq!(g, vec![(0, 2500), (2500, 6000)]);

    // Gestures that fit leave the base pause alone.
    let (s, l) = one_segment("Hold it.", 4000, 1, &[4000]);
    let t = align("t", None, &s, &l, &splitter, &cfg).unwrap().timeline;
    assert_eq!(t.speech[0].pause_after_ms, 500);
    assert_eq!((t.visuals[0].start_ms, t.visuals[0].end_ms), (0, 4000));

    // A capped extension turns the overrun into an error.
    let capped = AlignConfig {
        base_pause_ms: 500,
        max_pause_extension_ms: Some(1999),
    };
    let (s, l) = one_segment("Hold it.", 4000, 0, &[6000]);
    assert!(matches!(
        align("t", None, &s, &l, &splitter, &capped),
        Err(AlignError::GestureOverrun { overrun_ms: 2000, .. })
    ));

    let (s, l) = one_segment("Hi.", 2, 3, &[]);
    assert!(matches!(
        align("t", None, &s, &l, &splitter, &cfg),
        Err(AlignError::TooShortForImages { .. })
    ));
}

#[test]
fn alignment_is_deterministic() {
    let mut rng = rng(13);
    let splitter = SentenceSplitter::default();
    for _ in 0..100 {
        let (s, l) = gen::align_case(&mut rng);
        let a = align("t", Some("v1"), &s, &l, &splitter, &AlignConfig::default()).unwrap();
        let b = align("t", Some("v1"), &s, &l, &splitter, &AlignConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn compiled_random_tours_are_lawful_and_reproducible() {
    let mut rng = rng(14);
    let text_gen = TemplateTextGen;
    let scenes = BTreeMap::new();
    for case in 0..60 {
        let devices = rng.random_range(1..=4);
        let parts = gen::library(&mut rng, devices, 30_000);
        let (library, _) = AssetLibrary::build(parts).unwrap();
        let mut ids: Vec<String> = library.devices().map(|d| d.id.clone()).collect();
        ids.shuffle(&mut rng);
        ids.truncate(rng.random_range(1..=devices));
        let tour = TourPlan {
            id: format!("tour-{case}"),
            devices: ids,
            variant: None,
        };
        let mut config = Config::default();
        config.speech.rate_chars_per_sec = rng.random_range(3.0..20.0);
        config.script.variants = rng.random_range(1..=3);
        config.align.base_pause_ms = rng.random_range(0..=1500);
        let speech = StubSpeech::new(config.speech.rate_chars_per_sec);
        let clients = Clients {
            text_gen: &text_gen,
            speech: &speech,
            composer: None,
        };
        let input = CompileInput {
            library: &library,
            tour: &tour,
            config: &config,
            scenes: &scenes,
            variant: None,
            previous: None,
        };
        let a = compile(&input, &clients).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let b = compile(&input, &clients).unwrap();
        assert_eq!(a, b);
        for v in &a.variants {
            assert_eq!(v.timeline.to_files(), b.variant(&v.label).unwrap().timeline.to_files());
            let laws = oracle::timeline_laws(&v.timeline);
            assert!(laws.is_empty(), "case {case} {}: {laws:?}", v.label);
            assert!(validate_timeline(&v.timeline).is_clean());
            let devices: Vec<&str> = {
                let mut d: Vec<&str> = v.timeline.speech.iter().map(|s| s.device_id.as_str()).collect();
                d.dedup();
                d
            };
            assert_eq!(devices, tour.devices.iter().map(String::as_str).collect::<Vec<_>>());
            // Visuals and gestures only illustrate the learning point their
            // segment narrates, and only on that segment's device.
            let seg_lp: BTreeMap<_, _> = v
                .timeline
                .speech
                .iter()
                .map(|s| (s.segment_id.as_str(), (s.learning_point_id.as_deref(), s.device_id.as_str())))
                .collect();
            for e in &v.timeline.visuals {
                let (lp, _) = seg_lp[e.segment_id.as_str()];
                assert_eq!(lp, Some(e.learning_point_id.as_str()));
                assert_eq!(library.visual(&e.asset_id).unwrap().learning_point_id, e.learning_point_id);
            }
            for e in &v.timeline.gestures {
                let (lp, dev) = seg_lp[e.segment_id.as_str()];
                assert_eq!(lp, Some(e.learning_point_id.as_str()));
                assert_eq!(library.gesture(&e.unit_id).unwrap().context.device_id, dev);
            }
        }
    }
}
