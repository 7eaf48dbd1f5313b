"""
Configuration settings for the Quintain limerick engine.
Every value can be overridden from the environment or a .env file.
"""
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, str(default)))


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(name, str(default)))


def _env_bool(name: str, default: bool) -> bool:
    return os.getenv(name, str(default)).lower() == "true"


# Application settings
APP_NAME = "Quintain"
APP_VERSION = "0.3.0"
DEBUG_MODE = _env_bool("DEBUG_MODE", False)
LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING")

# Limerick form: 99669 syllables, anapestic stresses on every third syllable
LINE_SYLLABLES = (9, 9, 6, 6, 9)
STRESSED_POSITIONS = (
    frozenset({3, 6, 9}),
    frozenset({3, 6, 9}),
    frozenset({3, 6}),
    frozenset({3, 6}),
    frozenset({3, 6, 9}),
)
GENERATED_LINES = (2, 3, 4, 5)

# Search settings
DEFAULT_BEAM_SIZE = _env_int("QUINTAIN_BEAM_SIZE", 360)
DEFAULT_PER_TEMPLATE_BEAM = _env_int("QUINTAIN_PER_TEMPLATE_BEAM", 12)
DEFAULT_SEED = _env_int("QUINTAIN_SEED", 0)
MAX_LINE_TOKENS = _env_int("QUINTAIN_MAX_LINE_TOKENS", 12)
SEARCH_WORKERS = _env_int("QUINTAIN_SEARCH_WORKERS", 1)

# Storyline and first-line sampling
MAX_STORYLINE_ATTEMPTS = _env_int("QUINTAIN_MAX_STORYLINE_ATTEMPTS", 64)
MAX_FIRST_LINE_ATTEMPTS = _env_int("QUINTAIN_MAX_FIRST_LINE_ATTEMPTS", 64)
SINGLE_TEMPLATE_MAX_TRIES = _env_int("QUINTAIN_SINGLE_TEMPLATE_MAX_TRIES", 8)
SCORE_FIRST_LINE = _env_bool("QUINTAIN_SCORE_FIRST_LINE", False)

# Generation modes (ablation baselines)
GENERATION_MODES = ["full", "no_story", "single_template", "candidate_rank"]
MODE_ALIASES = {
    "mtbs": "full",
    "no-story": "no_story",
    "single-template": "single_template",
    "candidate-rank": "candidate_rank",
}

# Reference n-gram language model
NGRAM_ORDER = _env_int("QUINTAIN_NGRAM_ORDER", 2)
NGRAM_ALPHA = _env_float("QUINTAIN_NGRAM_ALPHA", 0.1)
NGRAM_FORMAT_VERSION = 1
UNK_TOKEN = "<unk>"
BOS_TOKEN = "<s>"

# Remote scoring endpoint
REMOTE_BASE_URL = os.getenv("QUINTAIN_REMOTE_URL", "http://localhost:8080")
REMOTE_TIMEOUT_MS = _env_int("QUINTAIN_REMOTE_TIMEOUT_MS", 10000)
REMOTE_TOP_K = _env_int("QUINTAIN_REMOTE_TOP_K", 50)
REMOTE_MAX_RETRIES = _env_int("QUINTAIN_REMOTE_MAX_RETRIES", 0)

# Template tagging
LITERAL_WORDS = ["who", "a", "an", "the", "and", "to", "his", "her"]

# Diversity comparison
DIVERSITY_SAMPLE_SIZE = _env_int("QUINTAIN_DIVERSITY_SAMPLE_SIZE", 50)
DIVERSITY_NUM_SAMPLES = _env_int("QUINTAIN_DIVERSITY_NUM_SAMPLES", 10)
DIVERSITY_NGRAM_ORDERS = [2, 3]
COMPARISON_COLUMNS = ["n", "run", "mean_popularity", "distinct_templates", "sample_size"]
