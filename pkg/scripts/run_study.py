import logging
from pathlib import Path

import hydra
from omegaconf import OmegaConf

from snmix.bench.presets import model_preset, penalty_comparison_preset, study_preset
from snmix.bench.study import StudySpec, run_penalty_comparison, run_study

logger = logging.getLogger(__name__)


class Workspace:

    def __init__(self, cfg):
        self.work_dir = Path.cwd()
        logger.info(f"workspace: {self.work_dir}")
        self.cfg = cfg
        logger.info(f"self.cfg: {OmegaConf.to_yaml(cfg)}")
        self.spec = None
        if cfg.study != "penalty-comparison":
            self.spec = self.build_spec(cfg)

    @staticmethod
    def build_spec(cfg) -> StudySpec:
        overrides = OmegaConf.to_container(cfg.overrides, resolve=True) if cfg.overrides else {}
        if cfg.model:
            return StudySpec(
                truth=model_preset(cfg.model),
                replications=cfg.replications,
                master_seed=cfg.seed,
                name=cfg.study,
                **overrides,
            )
        return study_preset(cfg.study, replications=cfg.replications, master_seed=cfg.seed, **overrides)

    def run(self):
        if self.spec is None:
            report = run_penalty_comparison(
                **penalty_comparison_preset(self.cfg.replications), seed=self.cfg.seed, threads=self.cfg.threads
            )
        else:
            report = run_study(self.spec, threads=self.cfg.threads)
        name = report.meta["name"]
        report.to_csv(str(self.work_dir / f"{name}.csv"))
        report.to_json(str(self.work_dir / f"{name}.json"))
        logger.info(f"{name}: {len(report.table)} rows in {report.meta['elapsed_seconds']:.1f} s")
        return report


@hydra.main(config_path="conf/.", config_name="study")
def main(cfg):
    from run_study import Workspace as W

    workspace = W(cfg)
    workspace.run()


if __name__ == "__main__":
    main()
