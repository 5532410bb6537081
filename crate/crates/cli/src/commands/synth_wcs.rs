//! Generate a deterministic synthetic naming survey over the standard chart.

use clap::Args;

use colorsig::synth::{synthetic_chart, write_survey, SurveyConfig};
use colorsig::Result;

use crate::manifest::ManifestBuilder;
use crate::Cli;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of languages to generate.
    #[arg(long, default_value_t = 110)]
    languages: u32,

    /// Speakers per language.
    #[arg(long, default_value_t = 20)]
    speakers: u32,

    /// Language id that carries the interleaved outlier system.
    #[arg(long, default_value_t = 55)]
    outlier_id: u32,
}

pub fn run(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let cfg = SurveyConfig {
        n_languages: args.languages,
        speakers: args.speakers,
        outlier_id: args.outlier_id,
        seed: cli.seed,
    };
    let chart = synthetic_chart();
    let mut manifest = ManifestBuilder::new("synth-wcs", cli.seed);
    let (terms, langs) = write_survey(&cli.out_dir, &chart, &cfg)?;
    manifest.output(&terms);
    manifest.output(&langs);
    manifest.output(&cli.out_dir.join("chart.tsv"));
    let path = manifest.write(&cli.out_dir)?;
    eprintln!(
        "wrote survey for {} languages to {} (manifest {})",
        args.languages,
        cli.out_dir.display(),
        path.display()
    );
    Ok(())
}
