use std::path::PathBuf;

use marl_lab::dtap::DtapConfig;
use marl_lab::Algorithm;

use crate::config::{
    ArenaSection, DynamicsSection, DynamicsTask, ExperimentConfig, Format, Mode, SweepSection,
};

/// Preset names with a one-line description each.
pub const PRESETS: [(&str, &str); 12] = [
    ("fig4", "WPL and IGA phase trajectories in matching pennies"),
    (
        "fig8",
        "WPL dynamics from every boundary start over a 10x10 grid of equilibria",
    ),
    ("fig12a", "WPL self-play in the coordination game"),
    ("fig12b", "WPL self-play in matching pennies"),
    ("fig12c", "WPL self-play in the tricky game"),
    ("fig14b", "GIGA self-play in matching pennies"),
    (
        "fig15",
        "GIGA, PHC-WoLF and GIGA-WoLF self-play in the tricky game",
    ),
    (
        "fig16",
        "WPL and GIGA-WoLF in rock-paper-scissors at two value learning rates",
    ),
    (
        "fig17",
        "WPL and GIGA-WoLF in Shapley's game at two value learning rates",
    ),
    (
        "fig18",
        "WPL self-play in the biased game, value learning rate 0.01",
    ),
    (
        "fig19",
        "WPL self-play in the biased game, value learning rate 1",
    ),
    (
        "fig21",
        "Task allocation on a 10x10 grid with WPL, GIGA-WoLF and GIGA",
    ),
];

fn experiment(name: &str, mode: Mode) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        seed: 1,
        output: PathBuf::from("out").join(name),
        format: Format::Csv,
        arena: None,
        dynamics: None,
        dtap: None,
        sweep: None,
    }
}

fn two_by_two(game: &str, algo: Algorithm) -> ArenaSection {
    ArenaSection {
        game: game.into(),
        algo,
        init: Some(vec![vec![0.1, 0.9], vec![0.9, 0.1]]),
        record_every: 10,
        ..ArenaSection::default()
    }
}

fn three_by_three(game: &str) -> ArenaSection {
    ArenaSection {
        game: game.into(),
        eta: 0.001,
        steps: 200_000,
        init: Some(vec![vec![0.1, 0.8, 0.1], vec![0.8, 0.1, 0.1]]),
        record_every: 100,
        ..ArenaSection::default()
    }
}

fn arena(name: &str, section: ArenaSection) -> ExperimentConfig {
    ExperimentConfig {
        arena: Some(section),
        ..experiment(name, Mode::Arena)
    }
}

fn sweep(name: &str, section: SweepSection) -> ExperimentConfig {
    ExperimentConfig {
        sweep: Some(section),
        ..experiment(name, Mode::Sweep)
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let cfg = match name {
        "fig4" => ExperimentConfig {
            dynamics: Some(DynamicsSection {
                game: Some("matching-pennies".into()),
                algorithms: vec![Algorithm::Wpl, Algorithm::Iga],
                starts: vec![[0.2, 0.5]],
                horizon: 40.0,
                ..DynamicsSection::default()
            }),
            ..experiment(name, Mode::Dynamics)
        },
        "fig8" => ExperimentConfig {
            dynamics: Some(DynamicsSection {
                task: DynamicsTask::Grid,
                horizon: 800.0,
                ..DynamicsSection::default()
            }),
            ..experiment(name, Mode::Dynamics)
        },
        "fig12a" => arena(
            name,
            ArenaSection {
                steps: 20_000,
                ..two_by_two("coordination", Algorithm::Wpl)
            },
        ),
        "fig12b" => arena(name, two_by_two("matching-pennies", Algorithm::Wpl)),
        "fig12c" => arena(name, two_by_two("tricky", Algorithm::Wpl)),
        "fig14b" => arena(name, two_by_two("matching-pennies", Algorithm::Giga)),
        "fig15" => sweep(
            name,
            SweepSection {
                arena: Some(two_by_two("tricky", Algorithm::Giga)),
                algos: vec![Algorithm::Giga, Algorithm::PhcWolf, Algorithm::GigaWolf],
                ..SweepSection::default()
            },
        ),
        "fig16" | "fig17" => sweep(
            name,
            SweepSection {
                arena: Some(three_by_three(if name == "fig16" {
                    "rock-paper-scissors"
                } else {
                    "shapleys"
                })),
                algos: vec![Algorithm::Wpl, Algorithm::GigaWolf],
                alphas: vec![0.1, 1.0],
                ..SweepSection::default()
            },
        ),
        "fig18" | "fig19" => arena(
            name,
            ArenaSection {
                alpha: if name == "fig18" { 0.01 } else { 1.0 },
                steps: 200_000,
                record_every: 100,
                ..two_by_two("biased", Algorithm::Wpl)
            },
        ),
        "fig21" => sweep(
            name,
            SweepSection {
                dtap: Some(DtapConfig::default()),
                algos: vec![Algorithm::Wpl, Algorithm::GigaWolf, Algorithm::Giga],
                ..SweepSection::default()
            },
        ),
        _ => return None,
    };
    Some(cfg)
}
