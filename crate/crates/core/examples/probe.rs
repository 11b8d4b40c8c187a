use gugt_core::classifier::SvmParams;
use gugt_core::evaluation::{repeat_evaluation, shuffle_subject_labels};
use gugt_core::pipeline::PipelineParams;
use gugt_core::synthgen::{generate_cohort, CohortParams};

fn main() {
    let dataset = generate_cohort(&CohortParams::separable(5, 7), 7).unwrap();
    let pipeline = PipelineParams::default();
    let svm = SvmParams::default();
    let n = dataset.len() as f64;
    let band = 1.96 * (0.25 / n).sqrt();
    let mut pooled = 0.0;
    let mut count = 0.0;
    for shuffle_seed in [99u64, 100, 101, 102, 103, 104, 105, 106] {
        let shuffled = shuffle_subject_labels(&dataset, shuffle_seed);
        let report = repeat_evaluation(&shuffled, 10, &svm, &pipeline, 3, 1).unwrap();
        println!("shuffle {}: mean acc {:.4}", shuffle_seed, report.mean_accuracy);
        pooled += report.mean_accuracy;
        count += 1.0;
        if count == 4.0 {
            println!("pooled over first 4: {:.4} band [{:.4},{:.4}]", pooled / count, 0.5 - band, 0.5 + band);
        }
    }
    println!("pooled over 8: {:.4} band [{:.4},{:.4}]", pooled / count, 0.5 - band, 0.5 + band);
}
