import os
import tempfile

os.environ.setdefault('FLASK_ENV', 'testing')
os.environ.setdefault('OUTPUT_DIR', tempfile.mkdtemp(prefix='writerid-output-'))
