//! `invertkit`: learn a model from samples and invert it over a performance box.
//!
//! Exit codes: 0 success, 1 error (nothing written), 2 regression budget
//! exhausted without reaching the target cost, 3 inversion box limit hit
//! (partial paving written).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Arg, ArgMatches, Command};

use config::{flag_value, keys_for, Resolved, Section, WORKERS_ENV};

struct Sub {
    name: &'static str,
    about: &'static str,
    sections: &'static [Section],
    run: fn(&Resolved) -> Result<u8>,
}

const SUBCOMMANDS: &[Sub] = &[
    Sub {
        name: "synth",
        about: "Sample a model on a grid, optionally with uniform noise, into data.csv",
        sections: &[Section::Synth, Section::Out],
        run: commands::cmd_synth,
    },
    Sub {
        name: "regress",
        about: "Fit a model to a CSV dataset by multi-start genetic programming",
        sections: &[Section::Gp, Section::Data, Section::Out],
        run: commands::cmd_regress,
    },
    Sub {
        name: "invert",
        about: "Pave the adjustment box R by where the model lands in P",
        sections: &[Section::Psi, Section::Problem, Section::Out],
        run: commands::cmd_invert,
    },
    Sub {
        name: "pipeline",
        about: "Regress on data (or synthesised data), then invert the learned model",
        sections: &[
            Section::Gp,
            Section::Psi,
            Section::Problem,
            Section::Data,
            Section::Synth,
            Section::Out,
        ],
        run: commands::cmd_pipeline,
    },
    Sub {
        name: "plot",
        about: "Render a 1D or 2D paving JSON file as SVG",
        sections: &[Section::Plot],
        run: commands::cmd_plot,
    },
];

fn cli() -> Command {
    let mut cmd = Command::new("invertkit")
        .about("Symbolic regression and interval set inversion")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sub in SUBCOMMANDS {
        let mut c = Command::new(sub.name).about(sub.about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("JSON file of dotted keys; flags override it"),
        );
        for key in keys_for(sub.sections) {
            let help = match (key.help.is_empty(), key.default.is_null()) {
                (true, true) => String::new(),
                (true, false) => format!("[default: {}]", key.default),
                (false, true) => key.help,
                (false, false) => format!("{} [default: {}]", key.help, key.default),
            };
            c = c.arg(
                Arg::new(key.name.clone())
                    .long(key.name)
                    .value_name("VALUE")
                    .allow_hyphen_values(true)
                    .help(help),
            );
        }
        cmd = cmd.subcommand(c);
    }
    cmd
}

fn resolve(sub: &Sub, m: &ArgMatches) -> Result<Resolved> {
    let flags = keys_for(sub.sections)
        .into_iter()
        .filter_map(|k| m.get_one::<String>(&k.name).map(|raw| (k.name.clone(), flag_value(raw))))
        .collect();
    Resolved::resolve(
        sub.sections,
        m.get_one::<PathBuf>("config").map(PathBuf::as_path),
        flags,
        std::env::var(WORKERS_ENV).ok(),
    )
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, m) = matches.subcommand().expect("subcommand required");
    let sub = SUBCOMMANDS.iter().find(|s| s.name == name).expect("registered subcommand");
    let result = resolve(sub, m).and_then(|cfg| {
        eprintln!("resolved config:\n{}", cfg.echo());
        (sub.run)(&cfg)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }
}
