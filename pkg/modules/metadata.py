import hashlib
import json
from datetime import datetime
from typing import Dict, List

from .config import ExperimentConfig

# fields that change where or how fast a run happens but not its numbers
VOLATILE_FIELDS = ("output", "threads", "dump_grids")


class ExperimentMetadata:
    """Helper class to manage the provenance attached to experiment outputs
    Instances of this class keep a reference to an ExperimentConfig and
    produce key-value pairs describing it, with the key string prefixed
    with "experiment_" to avoid collisions with the column names of the
    data they accompany

    the values are strings, the config itself json encoded.

    The fingerprint is the config_hash column of every CSV row: a sha256 of
    the canonical json of the config with the volatile fields removed, so
    that two runs differing only in output path or thread count share it.

    The grid dumps written by the cli begin with header_lines(), one
    "# key: value" comment per entry
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self._prefix = "experiment_"
        self.run_date = datetime.now().isoformat(timespec="seconds")

    def _get_key(self, name: str) -> str:
        """Get prefixed key name"""
        return f"{self._prefix}{name}"

    def canonical(self) -> str:
        data = self.config.to_dict()
        for key in VOLATILE_FIELDS:
            data.pop(key, None)
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    @property
    def fingerprint(self) -> str:
        """12 hex digits of the sha256 of the canonical config"""
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()[:12]

    def describe(self) -> str:
        config = self.config
        return "%s %s on I^%i, activation %s, measure %s, norm %s, n in %s [%s]" % (
            config.operator,
            config.function,
            config.d,
            config.activation,
            config.measure,
            config.norm_measure or config.measure,
            ",".join(str(n) for n in config.n_list),
            self.fingerprint,
        )

    def as_dict(self) -> Dict[str, str]:
        return {
            self._get_key("config"): self.canonical(),
            self._get_key("fingerprint"): self.fingerprint,
            self._get_key("run_date"): self.run_date,
        }

    def header_lines(self) -> List[str]:
        return ["# %s: %s" % (key, value) for key, value in self.as_dict().items()]
