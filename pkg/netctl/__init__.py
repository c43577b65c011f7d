"""

    netctl.__init__.py
    ~~~~~~~~~~~~~~~~~~
    Control energy of complex networks steered on a subset of target nodes.

    @author: z33k

"""
from netctl.utils import init_log

init_log()
