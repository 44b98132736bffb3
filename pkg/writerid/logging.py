import os
import sys
import traceback
from datetime import datetime
from itertools import chain
from logging import getLogger, Filter

import click

APP_NAME = os.getenv('FLASK_APP') or 'writerid'

#
# Utilities
#

def exception_as_rfc5424_structured_data(ex):

    tb = traceback.format_exception(*sys.exc_info())

    return {
        'structured_data': {
            'mdc': {
                'exception-message': str(ex),
                'exception': '|'.join(chain.from_iterable((s.splitlines() for s in tb[1:]))),
            }
        }
    }


#
# Context filters for loggers
#

class StageContextFilter(Filter):
    """A filter injecting the running command into stage records"""

    def filter(self, record):
        ctx = click.get_current_context(silent=True)
        record.command = ctx.info_name if ctx is not None else '-'
        return True


class Rfc5424MdcContextFilter(Filter):
    """A filter injecting diagnostic context suitable for RFC5424 messages"""

    def filter(self, record):
        record.msgid = APP_NAME
        if not hasattr(record, 'structured_data'):
            record.structured_data = {'mdc': {}}
        mdc = record.structured_data.get('mdc')
        if mdc is None:
            mdc = record.structured_data['mdc'] = {}
        ctx = click.get_current_context(silent=True)
        mdc.update({
            'logger': record.name,
            'thread': record.threadName,
            'command': ctx.info_name if ctx is not None else '-',
        })
        return True


#
# Initialize loggers in module level
#

mainLogger = getLogger(APP_NAME)
mainLogger.addFilter(Rfc5424MdcContextFilter())

_stageLogger = getLogger(APP_NAME + '.stage')
_stageLogger.addFilter(StageContextFilter())


def stageLogger(stage, execution_start, execution_time, run_id='-', success=1, comment=None):
    assert isinstance(execution_start, datetime)
    success = bool(success)
    execution_start = execution_start.strftime("%Y-%m-%d %H:%M:%S")
    _stageLogger.info(
        f"run={run_id}, stage={stage}, success={success}, execution_start={execution_start}, "
        f"execution_time={execution_time}, comment={comment}")
