//! Statistical invariants of the demonstration simulator and the
//! patch-extraction loop.

use symground_core::features::BackgroundParams;
use symground_core::plan::{AbstractStep, Action, Plan};
use symground_core::scene::{
    generate_scene, render_frame, simulate_demo, Assignment, DemoScript, DemoStep, FixationParams,
    Scene, SceneParams,
};
use symground_core::segment::{
    extract_labeled_patches, infer_locations, infer_segmentation, SegmentParams,
};

fn simple_script(scene: &Scene, targets: &[usize]) -> DemoScript {
    let plan = Plan::from_steps(
        targets
            .iter()
            .map(|&id| AbstractStep {
                action: Action::Pick,
                target: scene.objects[id].symbols(),
                location: "x-location".into(),
            })
            .collect(),
    );
    let steps = targets
        .iter()
        .map(|&target_object| DemoStep {
            target_object,
            true_location_mm: scene.objects[target_object].center_mm,
            nominal_duration: 50,
        })
        .collect();
    DemoScript { plan, steps }
}

#[test]
fn transition_fraction_matches_configuration() {
    let params = FixationParams::default();
    let mut total_transition = 0usize;
    let mut total = 0usize;
    for seed in 0..100u64 {
        let scene = generate_scene(&SceneParams::default(), seed).unwrap();
        let script = simple_script(&scene, &[0, 1, 2, 3]);
        let trace = simulate_demo(&scene, &script, &params, seed);
        let truth = trace.truth.as_ref().unwrap();
        total_transition +=
            truth.assignment.iter().filter(|a| matches!(a, Assignment::Transition)).count();
        total += trace.len();
    }
    let fraction = total_transition as f64 / total as f64;
    assert!(
        (fraction - params.transition_fraction).abs() <= 0.02,
        "observed transition fraction {fraction}"
    );
}

#[test]
fn action_samples_stay_within_four_sigma() {
    // At least 1e5 action samples; the Rayleigh tail beyond 4 sigma has
    // mass exp(-8), so at least 99.9% must fall inside.
    let params = FixationParams { sigma_fix: 5.0, ..FixationParams::default() };
    let mut inside = 0usize;
    let mut total = 0usize;
    for seed in 0..250u64 {
        let scene = generate_scene(&SceneParams::default(), seed).unwrap();
        let script = simple_script(&scene, &[0, 1, 2]);
        let trace = simulate_demo(&scene, &script, &params, seed ^ 0x5a5a);
        let truth = trace.truth.as_ref().unwrap();
        for (sample, assignment) in trace.samples.iter().zip(&truth.assignment) {
            if let Assignment::Action(step) = assignment {
                let center = scene.camera.mm_to_px(script.steps[*step].true_location_mm);
                let dx = sample.gaze_px.0 - center.0;
                let dy = sample.gaze_px.1 - center.1;
                if (dx * dx + dy * dy).sqrt() <= 4.0 * params.sigma_fix {
                    inside += 1;
                }
                total += 1;
            }
        }
    }
    assert!(total >= 100_000, "only {total} action samples");
    let rate = inside as f64 / total as f64;
    assert!(rate >= 0.999, "containment rate {rate}");
}

#[test]
fn emitted_patches_carry_true_symbols_without_noise() {
    // End-to-end label quality over 50 seeded demos at noise rate 0:
    // at least three quarters of the emitted patches must be labelled
    // with the object actually fixated.
    let fixation = FixationParams::default();
    let background = BackgroundParams::default();
    let mut correct = 0usize;
    let mut emitted = 0usize;
    for seed in 0..50u64 {
        let scene = generate_scene(&SceneParams::default(), seed).unwrap();
        let targets: Vec<usize> = (0..4).map(|i| (seed as usize + i) % scene.objects.len()).collect();
        let script = simple_script(&scene, &targets);
        let trace = simulate_demo(&scene, &script, &fixation, seed ^ 0x99);
        let seg = SegmentParams::new(fixation.sigma_fix, fixation.alpha, 640, 480);
        let partition = infer_segmentation(&trace, targets.len(), &seg).unwrap();
        let locations = infer_locations(&trace, &partition);
        let frame = render_frame(&scene);
        let extraction = extract_labeled_patches(
            &frame,
            &scene,
            &script.plan,
            &locations,
            48,
            &background,
            seed as usize,
        );
        for patch in &extraction.patches {
            let true_symbols = scene.objects[targets[patch.source.step]].symbols();
            if patch.symbols == true_symbols {
                correct += 1;
            }
            emitted += 1;
        }
    }
    assert!(emitted > 0);
    let rate = correct as f64 / emitted as f64;
    assert!(rate >= 0.75, "true-label rate {rate} below 0.75 ({correct}/{emitted})");
}

#[test]
fn render_crop_and_simulate_are_pure() {
    let scene = generate_scene(&SceneParams::default(), 12).unwrap();
    let script = simple_script(&scene, &[0, 1]);
    let params = FixationParams::default();
    assert_eq!(render_frame(&scene), render_frame(&scene));
    assert_eq!(
        simulate_demo(&scene, &script, &params, 3),
        simulate_demo(&scene, &script, &params, 3)
    );
}
