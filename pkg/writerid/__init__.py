__version__ = '1.0.0'


def create_app():
    from writerid import app
    return app.app


def main():
    from flask.cli import FlaskGroup
    FlaskGroup(create_app=create_app, add_default_commands=False, add_version_option=False)()
