import logging.config
from os import getenv, path

from flask import Flask
from flask_executor import Executor

from .utils import check_directory_writable, mkdir


class OutputDirNotSet(Exception):
    pass


if getenv('OUTPUT_DIR') is None:
    raise OutputDirNotSet('Environment variable OUTPUT_DIR is not set.')

logging.config.fileConfig(getenv('LOGGING_FILE_CONFIG') or path.join(path.dirname(__file__), 'logging.conf'),
                          disable_existing_loggers=False)

# Initialize app
app = Flask(__name__, instance_relative_config=True, instance_path=getenv('INSTANCE_PATH'))
environment = getenv('FLASK_ENV')
if environment == 'testing' or environment == 'development':
    secret_key = environment
else:
    secret_key = getenv('SECRET_KEY') or 'writerid'
app.config.from_mapping(
    SECRET_KEY=secret_key,
    OUTPUT_DIR=getenv('OUTPUT_DIR'),
    BUNDLE_DIR=getenv('BUNDLE_DIR') or path.join(getenv('OUTPUT_DIR'), 'bundles'),
    EXECUTOR_TYPE="thread",
    EXECUTOR_MAX_WORKERS=int(getenv('NUM_WORKERS', '1')),
    EXECUTOR_PROPAGATE_EXCEPTIONS=True,
)

mkdir(app.config['BUNDLE_DIR'])
check_directory_writable(app.config['OUTPUT_DIR'])

executor = Executor(app)


def set_max_workers(workers: int) -> None:
    """Re-initialise the shared executor with at most ``workers`` threads."""
    app.config['EXECUTOR_MAX_WORKERS'] = max(1, int(workers))
    executor.init_app(app)


with app.app_context():
    import writerid.cli  # noqa: E402,F401
