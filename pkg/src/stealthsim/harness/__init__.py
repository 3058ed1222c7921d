from .scenario import (
    ScenarioConfig,
    SocialDistribution,
    assign_social_aspects,
    build_scenario,
)

__all__ = ["ScenarioConfig", "SocialDistribution", "assign_social_aspects", "build_scenario"]
