"""Label-flipping attack and K-NN sanitization workbench for URL classifiers."""

from .attack import AttackResult, asr, flip_count, flip_labels
from .dataset import (
    LabeledDataset,
    PreprocessConfig,
    SplitDataset,
    generate_synthetic,
    iqr_rescale,
    load_csv,
    load_features_csv,
    preprocess,
    save_features_csv,
    split,
)
from .defense import (
    Alarm,
    DefenseResult,
    KSearchConfig,
    choose_k,
    knn_predict,
    sanitize,
)
from .forest import (
    DecisionTree,
    ForestModel,
    ForestParams,
    accuracy,
    gini,
    load_model,
    predict_class,
    predict_classes,
    predict_value,
    predict_values,
    save_model,
    train_forest,
    train_tree,
)
from .experiment import (
    ExperimentConfig,
    RunEntry,
    RunReport,
    emit_plot_data,
    load_config,
    render_tables,
    run_all,
    run_attack,
    run_clean,
    run_defense,
    subseed,
)
from .metrics import ConfusionMatrix, MetricsReport, confusion, rates
from .url_features import (
    FEATURE_NAMES,
    N_FEATURES,
    UrlParts,
    UrlRecord,
    char_entropy,
    extract_features,
    parse_url,
)

__version__ = "0.1.0"
