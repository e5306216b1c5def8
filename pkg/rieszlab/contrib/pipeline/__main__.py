import logging
import os
import sys

from .cli import main


logger = logging.getLogger('rieszlab')
logger.setLevel(os.getenv('RIESZLAB_LOG_LEVEL', 'INFO'))
logger_handler = logging.StreamHandler()
logger.addHandler(logger_handler)
logger_handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))

RIESZLAB_OUT = os.getenv('RIESZLAB_OUT')
RIESZLAB_WORKERS = os.getenv('RIESZLAB_WORKERS')
try:
    code = main(default_out=RIESZLAB_OUT, default_workers=int(RIESZLAB_WORKERS) if RIESZLAB_WORKERS else None)
except KeyboardInterrupt:
    code = 1
except Exception as e:
    logger.error('UnexpectedError', exc_info=e)
    code = 1
sys.exit(code)
