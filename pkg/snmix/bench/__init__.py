from snmix.bench.presets import model_preset, penalty_comparison_preset, study_preset
from snmix.bench.study import StudyReport, StudySpec, run_penalty_comparison, run_study
