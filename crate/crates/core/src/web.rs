//! Web API taxonomy and the provider-independent blogging types.

use alloc::{string::String, vec::Vec};
use core::{fmt, str::FromStr};

use serde::{Deserialize, Serialize};

/// The nine service groups of the Web API, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceGroup {
    Blogging,
    Email,
    InstantMessaging,
    SocialNetworks,
    Feeds,
    OffbeatDevices,
    Maps,
    Search,
    Media,
}

impl ServiceGroup {
    pub const ALL: [ServiceGroup; 9] = [
        ServiceGroup::Blogging,
        ServiceGroup::Email,
        ServiceGroup::InstantMessaging,
        ServiceGroup::SocialNetworks,
        ServiceGroup::Feeds,
        ServiceGroup::OffbeatDevices,
        ServiceGroup::Maps,
        ServiceGroup::Search,
        ServiceGroup::Media,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ServiceGroup::Blogging => "blogging",
            ServiceGroup::Email => "email",
            ServiceGroup::InstantMessaging => "instant_messaging",
            ServiceGroup::SocialNetworks => "social_networks",
            ServiceGroup::Feeds => "feeds",
            ServiceGroup::OffbeatDevices => "offbeat_devices",
            ServiceGroup::Maps => "maps",
            ServiceGroup::Search => "search",
            ServiceGroup::Media => "media",
        }
    }

    /// Only blogging has a contract and providers.
    pub fn implemented(self) -> bool {
        self == ServiceGroup::Blogging
    }
}

impl fmt::Display for ServiceGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown service group {0:?}")]
pub struct UnknownGroup(pub String);

impl FromStr for ServiceGroup {
    type Err = UnknownGroup;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|g| g.as_str() == s).ok_or_else(|| UnknownGroup(s.into()))
    }
}

/// A post as every blogging provider reports it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlogPost {
    #[serde(rename = "postRef")]
    pub post_ref: String,
    pub title: String,
    pub body: String,
    #[serde(rename = "publishedAt")]
    pub published_at: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderInfo {
    #[serde(rename = "providerID")]
    pub provider_id: String,
    pub capabilities: Vec<String>,
}

/// Number of whitespace-separated tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}
