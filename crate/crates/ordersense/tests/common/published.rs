//! Published per-(model, dataset) sensitivity values and transfer rows used
//! as golden fixtures by the acceptance suite.

/// Dataset column order of the per-(model, dataset) fixture.
pub const DATASETS: [&str; 7] = [
    "ag_news",
    "dbpedia",
    "gsm8k",
    "math",
    "mmlu",
    "nyt-locations",
    "nyt-topics",
];

pub struct ModelRow {
    pub model: &'static str,
    /// (ordering sensitivity, selection sensitivity) per dataset, in
    /// `DATASETS` order.
    pub cells: [(f64, f64); 7],
}

/// Full per-(model, dataset) grouped standard deviations (15 models x 7
/// datasets).
pub const PER_MODEL_DATASET: [ModelRow; 15] = [
    ModelRow {
        model: "Qwen2.5-0.5B",
        cells: [
            (0.04581, 0.03704),
            (0.00835, 0.01783),
            (0.01158, 0.01752),
            (0.01258, 0.01502),
            (0.00996, 0.01384),
            (0.02287, 0.02183),
            (0.04490, 0.04842),
        ],
    },
    ModelRow {
        model: "Qwen2.5-1.5B",
        cells: [
            (0.00911, 0.00729),
            (0.02336, 0.02324),
            (0.01154, 0.01532),
            (0.01821, 0.02304),
            (0.01051, 0.01358),
            (0.00874, 0.00935),
            (0.01213, 0.01068),
        ],
    },
    ModelRow {
        model: "Qwen2.5-3B",
        cells: [
            (0.01203, 0.01456),
            (0.01208, 0.01397),
            (0.01626, 0.03585),
            (0.01162, 0.01363),
            (0.01307, 0.01220),
            (0.00604, 0.01021),
            (0.01896, 0.01601),
        ],
    },
    ModelRow {
        model: "Qwen2.5-7B",
        cells: [
            (0.01188, 0.01120),
            (0.01185, 0.01190),
            (0.01185, 0.02471),
            (0.01591, 0.02234),
            (0.00677, 0.01045),
            (0.00885, 0.01138),
            (0.01597, 0.01634),
        ],
    },
    ModelRow {
        model: "Gemma-2-2B",
        cells: [
            (0.04655, 0.03853),
            (0.02022, 0.02114),
            (0.01306, 0.01836),
            (0.01314, 0.01920),
            (0.00953, 0.00909),
            (0.01942, 0.02089),
            (0.02077, 0.01903),
        ],
    },
    ModelRow {
        model: "Gemma-2-9B",
        cells: [
            (0.00856, 0.01091),
            (0.00730, 0.01201),
            (0.01501, 0.02188),
            (0.01351, 0.02068),
            (0.00759, 0.00935),
            (0.00707, 0.00862),
            (0.02121, 0.01839),
        ],
    },
    ModelRow {
        model: "Gemma-2B",
        cells: [
            (0.05299, 0.06901),
            (0.01917, 0.03062),
            (0.01252, 0.02081),
            (0.01276, 0.01994),
            (0.00953, 0.01081),
            (0.02165, 0.02174),
            (0.02318, 0.02243),
        ],
    },
    ModelRow {
        model: "Gemma-7B",
        cells: [
            (0.01033, 0.01194),
            (0.01501, 0.01369),
            (0.01595, 0.01974),
            (0.01397, 0.01729),
            (0.01483, 0.01620),
            (0.02131, 0.02031),
            (0.02106, 0.01971),
        ],
    },
    ModelRow {
        model: "Llama-3-1B",
        cells: [
            (0.03845, 0.03131),
            (0.01758, 0.02401),
            (0.01524, 0.02790),
            (0.01720, 0.01966),
            (0.00801, 0.00880),
            (0.01269, 0.01222),
            (0.01992, 0.01619),
        ],
    },
    ModelRow {
        model: "Llama-3-3B",
        cells: [
            (0.01239, 0.01454),
            (0.01036, 0.01106),
            (0.01441, 0.01827),
            (0.01419, 0.01581),
            (0.01071, 0.01138),
            (0.01527, 0.01755),
            (0.02892, 0.03190),
        ],
    },
    ModelRow {
        model: "Llama-3-8B",
        cells: [
            (0.00995, 0.01435),
            (0.08791, 0.13226),
            (0.01070, 0.01507),
            (0.01013, 0.01372),
            (0.01014, 0.01312),
            (0.04282, 0.06237),
            (0.02222, 0.02420),
        ],
    },
    ModelRow {
        model: "DeepSeek-Distill-1.5B",
        cells: [
            (0.05886, 0.05018),
            (0.04405, 0.03755),
            (0.01842, 0.03091),
            (0.03005, 0.03766),
            (0.01908, 0.02483),
            (0.03914, 0.04010),
            (0.04365, 0.03331),
        ],
    },
    ModelRow {
        model: "DeepSeek-Distill-7B",
        cells: [
            (0.04589, 0.03200),
            (0.03366, 0.02878),
            (0.01485, 0.02307),
            (0.04383, 0.04848),
            (0.01313, 0.01753),
            (0.02615, 0.02871),
            (0.02316, 0.01824),
        ],
    },
    ModelRow {
        model: "Gemma-3-27B",
        cells: [
            (0.00697, 0.00771),
            (0.00545, 0.00828),
            (0.02037, 0.04427),
            (0.00643, 0.00807),
            (0.05288, 0.09270),
            (0.00972, 0.01356),
            (0.00802, 0.00849),
        ],
    },
    ModelRow {
        model: "GPT-5-Nano",
        cells: [
            (0.03792, 0.03026),
            (0.06127, 0.04807),
            (0.00976, 0.00937),
            (0.02178, 0.01577),
            (0.01090, 0.01087),
            (0.00916, 0.01095),
            (0.01287, 0.01359),
        ],
    },
];

/// Published per-model aggregation: (model, order, selection, r).
pub const PER_MODEL_PUBLISHED: [(&str, f64, f64, f64); 15] = [
    ("Qwen2.5-0.5B", 0.0223, 0.0245, 1.10),
    ("Qwen2.5-1.5B", 0.0134, 0.0146, 1.10),
    ("Qwen2.5-3B", 0.0129, 0.0166, 1.29),
    ("Qwen2.5-7B", 0.0119, 0.0155, 1.30),
    ("Gemma-2-2B", 0.0204, 0.0209, 1.02),
    ("Gemma-2-9B", 0.0115, 0.0145, 1.27),
    ("Gemma-2B", 0.0217, 0.0279, 1.29),
    ("Gemma-7B", 0.0161, 0.0170, 1.06),
    ("Llama-3-1B", 0.0184, 0.0200, 1.09),
    ("Llama-3-3B", 0.0152, 0.0172, 1.13),
    ("Llama-3-8B", 0.0277, 0.0393, 1.42),
    ("DeepSeek-Distill-1.5B", 0.0362, 0.0364, 1.01),
    ("DeepSeek-Distill-7B", 0.0287, 0.0281, 0.98),
    ("Gemma-3-27B", 0.0157, 0.0262, 1.67),
    ("GPT-5-Nano", 0.0234, 0.0198, 0.85),
];

/// Published per-dataset aggregation: (dataset, order, selection, r).
pub const PER_DATASET_PUBLISHED: [(&str, f64, f64, f64); 7] = [
    ("ag_news", 0.0273, 0.0275, 1.01),
    ("dbpedia", 0.0268, 0.0308, 1.15),
    ("gsm8k", 0.0139, 0.0220, 1.58),
    ("math", 0.0168, 0.0223, 1.33),
    ("mmlu", 0.0172, 0.0206, 1.20),
    ("nyt-locations", 0.0189, 0.0216, 1.14),
    ("nyt-topics", 0.0229, 0.0223, 0.97),
];

/// Published overall means across all (model, dataset) cells.
pub const PUBLISHED_MEAN_ORDER: f64 = 0.01970;
pub const PUBLISHED_MEAN_SELECTION: f64 = 0.02251;

/// (model, gsm8k_best, math_best, gsm8k_avg, math_avg,
///  gsm8k_to_math, math_to_gsm8k, printed_ratio).
pub type TransferRow = (&'static str, f64, f64, f64, f64, f64, f64, f64);

/// Published cross-dataset transfer rows.
#[allow(clippy::approx_constant)] // 0.318 is a published accuracy, not 1/pi
pub const TRANSFER_ROWS: [TransferRow; 9] = [
    (
        "Qwen2.5-0.5B",
        0.228,
        0.142,
        0.208,
        0.120,
        0.118,
        0.207,
        0.872,
    ),
    (
        "Qwen2.5-1.5B",
        0.378,
        0.148,
        0.360,
        0.119,
        0.109,
        0.355,
        0.837,
    ),
    (
        "Qwen2.5-7B",
        0.616,
        0.244,
        0.590,
        0.211,
        0.207,
        0.593,
        0.905,
    ),
    (
        "Qwen2.5-3B",
        0.470,
        0.318,
        0.436,
        0.297,
        0.290,
        0.439,
        0.923,
    ),
    (
        "DeepSeek-R1-Distill-Qwen-7B",
        0.260,
        0.131,
        0.166,
        0.088,
        0.076,
        0.168,
        0.612,
    ),
    (
        "DeepSeek-R1-Distill-Qwen-1.5B",
        0.523,
        0.232,
        0.467,
        0.160,
        0.161,
        0.466,
        0.792,
    ),
    (
        "Llama-3.2-1B-Instruct",
        0.266,
        0.029,
        0.232,
        0.009,
        0.012,
        0.234,
        0.644,
    ),
    (
        "Llama-3.1-8B-Instruct",
        0.685,
        0.298,
        0.648,
        0.244,
        0.259,
        0.646,
        0.906,
    ),
    (
        "Llama-3.2-3B-Instruct",
        0.523,
        0.150,
        0.490,
        0.082,
        0.069,
        0.488,
        0.695,
    ),
];

/// Printed mean of the transfer-ratio column.
pub const TRANSFER_PRINTED_MEAN: f64 = 0.798;
