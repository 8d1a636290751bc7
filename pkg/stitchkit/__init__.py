# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

# Bump when the synthesis procedure or the manifest layout changes; replaying a
# manifest is only guaranteed bit-exact under the same version.
__version__ = "0.3.0"
version_split = __version__.split(".")
__manifest_version__ = (
    (1000 * int(version_split[0]))
    + (10 * int(version_split[1]))
    + (1 * int(version_split[2]))
)

# Import all submodules.
from . import errors
from . import imgcore
from . import augment
from . import inject
from . import decompose
from . import score
from . import metrics
