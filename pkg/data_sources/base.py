# data_sources/base.py
from abc import ABC, abstractmethod
from typing import Iterator, List

from problems.blls import BllsInstance


class InstanceSource(ABC):
    """Base class for every provider of BLLS instances."""

    @property
    @abstractmethod
    def source_name(self) -> str:
        """Return a short description of where the instances come from."""
        pass

    @abstractmethod
    def instances(self) -> Iterator[BllsInstance]:
        """
        Yield the instances in a stable order (by n, then index).

        Returns:
            iterator of BllsInstance with instance_id set
        """
        pass

    def get(self, instance_id: str) -> BllsInstance:
        """
        Look up one instance by id.

        Raises:
            KeyError: no instance carries that id
        """
        for instance in self.instances():
            if instance.instance_id == instance_id:
                return instance
        raise KeyError(instance_id)

    def to_list(self) -> List[BllsInstance]:
        return list(self.instances())
