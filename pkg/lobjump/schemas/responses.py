from typing import Any, Dict, List, Optional

from pydantic import BaseModel


class StageResponse(BaseModel):
    """One-line result envelope printed by the launcher."""

    result: str
    stage: str
    message: Optional[str] = None
    error: Optional[str] = None
    artifacts: Optional[List[str]] = None
    details: Optional[Dict[str, Any]] = None

    def line(self) -> str:
        return self.model_dump_json(exclude_none=True)
