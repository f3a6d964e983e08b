# TalkShop core: Gemini reasoning + preference learning
