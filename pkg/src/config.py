"""
Configuration settings for the shopper model.
"""
import os
from pathlib import Path

# Project root
ROOT_DIR = Path(__file__).parent.parent

# Logging configuration
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Runtime configuration
SHOPPER_THREADS = int(os.getenv('SHOPPER_THREADS', '1'))
SHOPPER_SEED = int(os.getenv('SHOPPER_SEED', '0'))

# Dataset configuration
CHECKOUT_ID = '__checkout__'
TEST_WEEKS = int(os.getenv('TEST_WEEKS', '8'))  # "last two months" of the collection period
VALIDATION_FRACTION = float(os.getenv('VALIDATION_FRACTION', '0.05'))
WEEKS_PER_YEAR = 52
WEEKS_PER_MONTH = 4

# Model configuration
EXACT_BASKET_CAP = int(os.getenv('EXACT_BASKET_CAP', '8'))  # factorial enumeration limit

# Inference configuration
GAMMA_SHAPE_AUGMENTATION = int(os.getenv('GAMMA_SHAPE_AUGMENTATION', '10'))
PARAMETER_FLOOR = float(os.getenv('PARAMETER_FLOOR', '1e-5'))  # std, gamma shape and mean
TRIP_CHUNK_SIZE = int(os.getenv('TRIP_CHUNK_SIZE', '16'))  # fixed reduction blocks

# Evaluation configuration
BOOTSTRAP_RESAMPLES = int(os.getenv('BOOTSTRAP_RESAMPLES', '200'))
DEFAULT_SKEW_THRESHOLDS = (0.025, 0.05, 0.15)
