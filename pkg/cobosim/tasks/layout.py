"""Ground-truth cluster layout of the clients."""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from ..errors import UsageError


@dataclass(frozen=True)
class ClusterLayout:
    """Partition of clients into clusters.

    ``assignment[i]`` is the cluster index of client i; clusters are
    numbered 0..K-1 and every index in that range must be used.
    """

    assignment: Tuple[int, ...]
    cluster_members: Tuple[Tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        assignment = tuple(int(k) for k in self.assignment)
        if not assignment:
            raise UsageError("ClusterLayout needs at least one client")
        n_clusters = max(assignment) + 1
        members: Dict[int, List[int]] = {k: [] for k in range(n_clusters)}
        for client, cluster in enumerate(assignment):
            if cluster < 0:
                raise UsageError(f"Negative cluster index for client {client}")
            members[cluster].append(client)
        empty = [k for k, clients in members.items() if not clients]
        if empty:
            raise UsageError(f"Clusters without members: {empty}")
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(
            self, "cluster_members", tuple(tuple(members[k]) for k in range(n_clusters))
        )

    @classmethod
    def blocks(cls, n_clusters: int, cluster_size: int) -> "ClusterLayout":
        """Contiguous equal-size clusters: [0]*c + [1]*c + ..."""
        return cls(tuple(k for k in range(n_clusters) for _ in range(cluster_size)))

    @property
    def n_clients(self) -> int:
        return len(self.assignment)

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_members)

    def cluster_of(self, client: int) -> int:
        return self.assignment[client]

    def same_cluster(self, i: int, j: int) -> bool:
        return self.assignment[i] == self.assignment[j]

    def members(self, cluster: int) -> Sequence[int]:
        return self.cluster_members[cluster]
