use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use waveguide::golden::Golden;
use waveguide::pipeline::Report;
use waveguide::{run_all, run_bound_states, run_potential, run_threshold, CliError, Context, ExitStatus, Scenario};

#[derive(Parser)]
struct Args {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (defaults to the scenario's `outputs`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "n-t")]
    n_t: Option<usize>,
    #[arg(long = "n-x")]
    n_x: Option<usize>,
    /// Strip half-lengths, comma separated.
    #[arg(long = "L", value_delimiter = ',')]
    l_list: Option<Vec<f64>>,
    /// Golden file to compare against (defaults to the shipped one).
    #[arg(long)]
    golden: Option<PathBuf>,
    /// Write the computed values into the golden file instead of checking them.
    #[arg(long, requires = "golden")]
    update_golden: bool,
    /// Also write the largest 2D matrix in coordinate format.
    #[arg(long)]
    export_matrix: bool,
}

#[derive(Parser)]
#[command(name = "waveguide", version, about = "Bound states of sheared and broken waveguides")]
enum Top {
    /// Essential-spectrum threshold and fiber bands.
    Threshold(Args),
    /// Effective potential and theorem classification.
    Potential(Args),
    /// 2D eigenvalues below threshold and variational certificates.
    BoundStates(Args),
    /// Everything above.
    All(Args),
}

fn run(top: Top) -> Result<ExitStatus, CliError> {
    let (which, args) = match top {
        Top::Threshold(a) => (0, a),
        Top::Potential(a) => (1, a),
        Top::BoundStates(a) => (2, a),
        Top::All(a) => (3, a),
    };
    let mut scenario = Scenario::load(&args.scenario)?;
    let overridden = args.n_t.is_some() || args.n_x.is_some() || args.l_list.is_some();
    if let Some(n) = args.n_t {
        scenario.resolution.n_t = n;
    }
    if let Some(n) = args.n_x {
        scenario.resolution.n_x = n;
    }
    if let Some(l) = args.l_list {
        scenario.resolution.l_list = l;
    }
    scenario.resolution.validate()?;
    let golden = match (&args.golden, args.update_golden) {
        (Some(p), false) => Golden::load(p)?,
        (Some(p), true) if p.exists() => {
            let mut g = Golden::load(p)?;
            g.scenarios.remove(&scenario.name);
            g
        }
        (Some(_), true) => Golden {
            version: "1".into(),
            ..Golden::default()
        },
        // shipped values hold at the scenario's own resolution only
        (None, _) if overridden => {
            eprintln!("note: resolution overridden, skipping the shipped golden check");
            Golden::default()
        }
        (None, _) => Golden::shipped(),
    };
    let name = scenario.name.clone();
    let mut ctx = Context::new(scenario, args.out, golden);
    ctx.export_matrix = args.export_matrix;
    let (status, values) = match which {
        0 => {
            let r = run_threshold(&ctx)?;
            (r.status(), r.golden_values())
        }
        1 => {
            let r = run_potential(&ctx)?;
            (r.status(), r.golden_values())
        }
        2 => {
            let r = run_bound_states(&ctx)?;
            (r.status(), r.golden_values())
        }
        _ => {
            let r = run_all(&ctx)?;
            (r.status(), r.golden_values())
        }
    };
    if args.update_golden {
        let path = args.golden.expect("clap enforces --golden");
        let mut g = ctx.golden.clone();
        g.record(&name, &values);
        g.save(&path)?;
    }
    Ok(status)
}

fn main() -> ExitCode {
    match run(Top::parse()) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ExitStatus::Error as u8)
        }
    }
}
